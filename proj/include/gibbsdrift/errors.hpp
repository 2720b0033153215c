#pragma once

#include <stdexcept>
#include <string>

namespace gibbsdrift {

// Precondition / configuration problems (bad name, bad dimension, t >= T, ...).
struct validation_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures (quadrature did not converge, envelope violated, ...).
struct computation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gibbsdrift
