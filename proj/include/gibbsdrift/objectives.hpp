#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gibbsdrift {

// An objective with hand-coded derivatives and (when available) metadata
// about its global minimizer. Evaluation is pure and re-entrant.
struct ObjectiveSpec {
    std::string name;
    int dim = 0;
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;

    std::optional<double> known_min_value;                    // f*
    std::optional<Eigen::VectorXd> known_minimizer;           // x*
    std::optional<Eigen::MatrixXd> known_hessian_at_min;      // H*
    double coercivity_radius_hint = 2.0;                      // f >= f*+1 outside this radius

    // Set for f(y) = 1/2 y^T A y; enables the exact Gaussian route.
    std::optional<Eigen::MatrixXd> quadratic_form;

    // True for objectives that violate the integrability assumption; these
    // are kept out of the verification suites and appear only in CLI demos.
    bool demo_only = false;
};

// Families: iso_quadratic, aniso_quadratic (A = diag(1,4,9,...)),
// shifted_double_well, rosenbrock (dim >= 2), smoothed_ackley (demo only).
ObjectiveSpec builtin_objective(const std::string& name, int dim);

std::vector<std::string> builtin_objective_names();

}  // namespace gibbsdrift
