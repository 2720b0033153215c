#pragma once

#include <cmath>

#include "gibbsdrift/errors.hpp"

namespace gibbsdrift {

// Parameters of the finite-horizon control criterion.
//
// horizon_T and diffusivity_beta set the time-dependent search radius
// sqrt(2*beta*(T-t)); cost_lambda sets the inverse temperature
// alpha = T / (2*lambda*beta). terminal_offset_delta is the stopping margin
// of the integrator (the drift carries a (T-t)^-1 factor near t = T).
struct ControlParams {
    double horizon_T;
    double diffusivity_beta;
    double cost_lambda;
    double terminal_offset_delta;

    ControlParams(double T, double beta, double lambda, double delta = -1.0)
        : horizon_T(T),
          diffusivity_beta(beta),
          cost_lambda(lambda),
          terminal_offset_delta(delta < 0.0 ? 0.01 * T : delta) {
        if (!(horizon_T > 0.0)) throw validation_error("ControlParams: horizon_T must be positive");
        if (!(diffusivity_beta > 0.0))
            throw validation_error("ControlParams: diffusivity_beta must be positive");
        if (!(cost_lambda > 0.0)) throw validation_error("ControlParams: cost_lambda must be positive");
        if (!(terminal_offset_delta > 0.0 && terminal_offset_delta < horizon_T))
            throw validation_error("ControlParams: need 0 < delta < T");
    }

    // Inverse temperature of the Gibbs factor.
    double alpha() const { return horizon_T / (2.0 * cost_lambda * diffusivity_beta); }

    // Variance of the Gaussian search kernel at time t.
    double heat_variance(double t) const { return 2.0 * diffusivity_beta * (horizon_T - t); }
};

inline double alpha(const ControlParams& params) { return params.alpha(); }

}  // namespace gibbsdrift
