#pragma once

#include <optional>

#include <Eigen/Core>

#include "gibbsdrift/control.hpp"
#include "gibbsdrift/objectives.hpp"
#include "gibbsdrift/quadrature.hpp"

namespace gibbsdrift::oracle {

// Everything the closed form knows about one space-time point.
struct DriftEvaluation {
    double t = 0.0;
    Eigen::VectorXd x;
    double log_h = 0.0;        // log h(t,x) = log (G_{T-t} * pi)(x)
    double phi = 0.0;          // -2 beta log_h
    double value_V = 0.0;      // value function
    Eigen::VectorXd barycenter_a;
    Eigen::VectorXd drift_u;   // -(x - a)/(T-t)
    Eigen::MatrixXd covariance;
};

// Engine evaluating integrals against G_{T-t}(x-.) exp(-alpha f(.)) on one
// fixed grid. The Gibbs part (-alpha f + log quadrature weight) is cached per
// node at construction, so repeated evaluations at perturbed (t, x) share the
// exact same nodes and weights; finite differences taken through this object
// see a smooth function of (t, x).
class GridEvaluator {
public:
    GridEvaluator(const ObjectiveSpec& obj, const ControlParams& params, QuadratureGrid grid);

    // L(t,x) = log of integral of G_{T-t}(x-y) exp(-alpha f(y)) dy.
    double log_heat_gibbs(double t, const Eigen::VectorXd& x) const;

    // Full evaluation; log_M is the log partition function of the Gibbs factor.
    DriftEvaluation evaluate(double t, const Eigen::VectorXd& x, double log_M) const;

    // E_eta[grad f(Y)] at (t,x).
    Eigen::VectorXd averaged_gradient(double t, const Eigen::VectorXd& x) const;

    // eta_{t,x}(|Y - center| >= radius).
    double tail_mass(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& center,
                     double radius) const;

    // log of integral of exp(-alpha f) over the grid box (no heat factor).
    double log_gibbs_integral() const;

    // Mean and covariance of the Gibbs density restricted to the box.
    void gibbs_moments(Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const;

    // pi(|Y - center| <= radius), normalized over the box.
    double gibbs_ball_mass(const Eigen::VectorXd& center, double radius) const;

    const QuadratureGrid& grid() const { return grid_; }
    const ControlParams& params() const { return params_; }

private:
    const ObjectiveSpec* obj_;
    ControlParams params_;
    QuadratureGrid grid_;
    std::vector<double> gibbs_log_weight_;  // -alpha f(y_i) + log quad weight_i
};

// Box selection + node-doubling refinement until successive log-integral and
// moment estimates agree within tol. Throws computation_error if the node
// budget is exhausted or (for non-demo objectives) the boundary decay
// criterion cannot be met.
QuadratureGrid build_grid(const ObjectiveSpec& obj, const ControlParams& params, double t,
                          const Eigen::VectorXd& x, double tol);

// One refined evaluator whose box covers several anchors at once, so that
// finite differences and segment integrals across those anchors all see the
// same nodes and weights.
GridEvaluator make_shared_evaluator(const ObjectiveSpec& obj, const ControlParams& params, double t,
                                    const std::vector<Eigen::VectorXd>& anchors, double tol);

// Quadrature evaluation at (t, x); dimension capped at 3.
DriftEvaluation evaluate_point(const ObjectiveSpec& obj, const ControlParams& params, double t,
                               const Eigen::VectorXd& x, double tol);
DriftEvaluation evaluate_point(const ObjectiveSpec& obj, const ControlParams& params, double t,
                               const Eigen::VectorXd& x, double tol, double log_M);

// Exact evaluation for f(y) = 1/2 y^T A y by Gaussian completion of squares.
DriftEvaluation gaussian_closed_form(const Eigen::MatrixXd& A, const ControlParams& params,
                                     double t, const Eigen::VectorXd& x);

// Dispatch: closed form for registered quadratics, quadrature otherwise.
DriftEvaluation evaluate_auto(const ObjectiveSpec& obj, const ControlParams& params, double t,
                              const Eigen::VectorXd& x, double tol);

// Barycenter/drift only (no partition function needed); closed form for
// quadratics. This is the oracle drift used by the integrator.
Eigen::VectorXd oracle_drift(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, double tol);

struct ThreeDrifts {
    Eigen::VectorXd u_potential;    // -grad Phi, central differences of the potential
    Eigen::VectorXd u_avg_gradient; // -(T/lambda) E_eta[grad f]
    Eigen::VectorXd u_barycentric;  // -(x - a)/(T-t)
};
ThreeDrifts drift_three_ways(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, double tol);

double eta_log_density(const ObjectiveSpec& obj, const ControlParams& params, double t,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tol);

// log p*(t,x; s,y) = log G_{s-t}(y-x) + log h(s,y) - log h(t,x), 0 <= t < s <= T.
double transition_log_kernel(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, double s, const Eigen::VectorXd& y,
                             double tol);

struct PartitionResult {
    double log_M = 0.0;
    double free_energy = 0.0;  // -(2 lambda beta / T) log_M
};
PartitionResult partition_free_energy(const ObjectiveSpec& obj, const ControlParams& params,
                                      double tol);

// Gibbs moments of pi itself (no heat factor); used by the rejection sampler.
struct GibbsMoments {
    double log_M = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
GibbsMoments gibbs_moments(const ObjectiveSpec& obj, const ControlParams& params, double tol);

// pi(|Y - center| <= radius); mass oracle for concentration tests.
double gibbs_ball_mass(const ObjectiveSpec& obj, const ControlParams& params,
                       const Eigen::VectorXd& center, double radius, double tol);

// Piecewise-linear CDF of pi for d = 1, tabulated on an adaptive grid.
struct GibbsCdf {
    std::vector<double> x;
    std::vector<double> F;
    double operator()(double v) const;
};
GibbsCdf gibbs_cdf_1d(const ObjectiveSpec& obj, const ControlParams& params, double tol);

struct MoreauResult {
    Eigen::VectorXd y_opt;
    double envelope_value = 0.0;
    bool newton_converged = true;
};
// Global minimizer of f(y) + lambda |y - x0|^2 / (2 T^2): coarse scan over the
// truncation box, then Newton polish; ties broken toward the smallest index.
MoreauResult moreau_prox(const ObjectiveSpec& obj, const ControlParams& params,
                         const Eigen::VectorXd& x0, double tol);

// ---- finite-difference probes on a shared GridEvaluator ----------------
// All derivatives below difference L(t, .) on one fixed grid so that the
// quadrature error cancels smoothly.

// Step for x-derivatives, scale-adaptive.
inline double fd_step(const Eigen::VectorXd& x) { return std::max(1e-5, 1e-5 * x.norm()); }

Eigen::VectorXd drift_potential_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x);
Eigen::MatrixXd phi_hessian_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x);
double phi_laplacian_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x);
Eigen::MatrixXd barycenter_jacobian_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x);

struct ValueDerivatives {
    double dt = 0.0;        // time derivative (step 1e-4)
    Eigen::VectorXd grad;   // spatial gradient
    double laplacian = 0.0; // spatial Laplacian
};
ValueDerivatives value_derivatives_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x);

}  // namespace gibbsdrift::oracle
