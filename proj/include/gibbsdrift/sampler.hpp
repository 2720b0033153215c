#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gibbsdrift/control.hpp"
#include "gibbsdrift/objectives.hpp"
#include "gibbsdrift/rng.hpp"

namespace gibbsdrift::sampler {

struct WeightedSample {
    Eigen::VectorXd point;
    double log_weight;  // -alpha f(point)
};

struct BarycenterEstimate {
    Eigen::VectorXd estimate;
    double effective_sample_size = 0.0;  // (sum w)^2 / sum w^2, in (0, N]
    std::int64_t n_samples = 0;
    bool low_ess = false;  // ESS < 10; estimate still returned
};

// Self-normalized importance-sampling barycenter: Y^j ~ N(x, 2 beta (T-t) I),
// weights softmax(-alpha f(Y^j)) with a single max shift. Sample j draws from
// stream.fork(j), so the result is bit-identical for any thread count.
BarycenterEstimate mc_barycenter(const ObjectiveSpec& obj, const ControlParams& params, double t,
                                 const Eigen::VectorXd& x, std::int64_t n, RngStream stream);

// -(x - a_N)/(T-t) with a_N from mc_barycenter.
Eigen::VectorXd approx_drift(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, std::int64_t n, RngStream stream);

struct PiSamples {
    std::vector<Eigen::VectorXd> points;
    double acceptance_rate = 0.0;
    std::int64_t proposals = 0;
};

// i.i.d. draws from pi by rejection from a Gaussian proposal whose moments
// come from the quadrature oracle (dim <= 2). The envelope constant is
// validated on the oracle grid; on a detected violation it is inflated x10
// and the draw restarted once, then a hard error is raised.
PiSamples sample_pi_lambda(const ObjectiveSpec& obj, const ControlParams& params, std::int64_t n,
                           RngStream stream, double tol = 1e-8);

// Draws with density h(0, .): Y + sqrt(2 beta T) xi with Y ~ pi.
PiSamples sample_h0(const ObjectiveSpec& obj, const ControlParams& params, std::int64_t n,
                    RngStream stream, double tol = 1e-8);

}  // namespace gibbsdrift::sampler
