#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gibbsdrift/errors.hpp"

namespace gibbsdrift {

// Tensor-product trapezoid grid on [center - radius, center + radius]^d.
// Trapezoid panels on a rapidly decaying smooth integrand converge
// spectrally, and per-axis weights sum to 2*radius exactly up to rounding.
struct QuadratureGrid {
    int dim = 0;
    std::vector<std::vector<double>> nodes;        // per axis, strictly increasing
    std::vector<std::vector<double>> weights;      // per axis, positive
    std::vector<std::vector<double>> log_weights;  // per axis, log of the above
    Eigen::VectorXd truncation_center;
    double truncation_radius = 0.0;
    double neglected_mass_bound = 0.0;

    std::int64_t node_count() const {
        std::int64_t n = 1;
        for (const auto& ax : nodes) n *= static_cast<std::int64_t>(ax.size());
        return n;
    }

    // Decode a flat tensor index into a point; axis 0 is the slowest index.
    void point_at(std::int64_t flat, Eigen::VectorXd& y) const {
        for (int a = dim - 1; a >= 0; --a) {
            const std::int64_t na = static_cast<std::int64_t>(nodes[a].size());
            y[a] = nodes[a][static_cast<std::size_t>(flat % na)];
            flat /= na;
        }
    }

    // Sum of per-axis log quadrature weights for the node at a flat index.
    double log_quad_weight_at(std::int64_t flat) const {
        double s = 0.0;
        for (int a = dim - 1; a >= 0; --a) {
            const std::int64_t na = static_cast<std::int64_t>(nodes[a].size());
            s += log_weights[a][static_cast<std::size_t>(flat % na)];
            flat /= na;
        }
        return s;
    }
};

inline QuadratureGrid make_uniform_grid(const Eigen::VectorXd& center, double radius,
                                        int panels_per_axis) {
    if (!(radius > 0.0)) throw validation_error("make_uniform_grid: radius must be positive");
    if (panels_per_axis < 2) throw validation_error("make_uniform_grid: need at least 2 panels");
    QuadratureGrid grid;
    grid.dim = static_cast<int>(center.size());
    grid.truncation_center = center;
    grid.truncation_radius = radius;
    const int n = panels_per_axis + 1;
    const double step = 2.0 * radius / panels_per_axis;
    grid.nodes.resize(grid.dim);
    grid.weights.resize(grid.dim);
    grid.log_weights.resize(grid.dim);
    for (int a = 0; a < grid.dim; ++a) {
        grid.nodes[a].resize(n);
        grid.weights[a].resize(n);
        grid.log_weights[a].resize(n);
        for (int j = 0; j < n; ++j) {
            grid.nodes[a][j] = center[a] - radius + j * step;
            grid.weights[a][j] = (j == 0 || j == n - 1) ? 0.5 * step : step;
            grid.log_weights[a][j] = std::log(grid.weights[a][j]);
        }
    }
    return grid;
}

}  // namespace gibbsdrift
