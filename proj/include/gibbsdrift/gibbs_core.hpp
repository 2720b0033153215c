#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/Core>

#include "gibbsdrift/control.hpp"
#include "gibbsdrift/errors.hpp"
#include "gibbsdrift/objectives.hpp"

namespace gibbsdrift {

// log G_r(z) for the heat kernel G_r(z) = (4 pi beta r)^{-d/2} exp(-|z|^2 / (4 beta r)).
inline double log_heat_kernel(double r, const Eigen::VectorXd& z, double beta) {
    if (!(r > 0.0)) throw validation_error("log_heat_kernel: r must be positive");
    const double d = static_cast<double>(z.size());
    return -0.5 * d * std::log(4.0 * M_PI * beta * r) - z.squaredNorm() / (4.0 * beta * r);
}

// Proximally penalized energy f(y) + lambda |y-x|^2 / (2 T (T-t)).
inline double penalized_energy(const ObjectiveSpec& obj, const ControlParams& params, double t,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (!(t < params.horizon_T)) throw validation_error("penalized_energy: t must be < T");
    const double tau = params.horizon_T - t;
    return obj.value(y) + params.cost_lambda * (y - x).squaredNorm() / (2.0 * params.horizon_T * tau);
}

// Log of the unnormalized terminal weight, -alpha f(y) - |y-x|^2/(4 beta (T-t)).
// Identically equal to -alpha * penalized_energy.
inline double log_weight(const ObjectiveSpec& obj, const ControlParams& params, double t,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (!(t < params.horizon_T)) throw validation_error("log_weight: t must be < T");
    const double tau = params.horizon_T - t;
    return -params.alpha() * obj.value(y) -
           (y - x).squaredNorm() / (4.0 * params.diffusivity_beta * tau);
}

// Max-shifted log(sum(exp(v_i))). Exact for a single element.
inline double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw validation_error("log_sum_exp: empty input");
    const double m = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(m)) return m;  // all -inf (or a NaN/inf poisoning the max)
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace gibbsdrift
