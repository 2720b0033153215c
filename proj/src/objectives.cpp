#include "gibbsdrift/objectives.hpp"

#include <cmath>

#include "gibbsdrift/errors.hpp"

namespace gibbsdrift {

namespace {

ObjectiveSpec make_quadratic(const std::string& name, const Eigen::MatrixXd& A, double radius_hint) {
    ObjectiveSpec spec;
    spec.name = name;
    spec.dim = static_cast<int>(A.rows());
    spec.value = [A](const Eigen::VectorXd& y) { return 0.5 * y.dot(A * y); };
    spec.gradient = [A](const Eigen::VectorXd& y) -> Eigen::VectorXd { return A * y; };
    spec.hessian = [A](const Eigen::VectorXd&) -> Eigen::MatrixXd { return A; };
    spec.known_min_value = 0.0;
    spec.known_minimizer = Eigen::VectorXd::Zero(spec.dim);
    spec.known_hessian_at_min = A;
    spec.coercivity_radius_hint = radius_hint;
    spec.quadratic_form = A;
    return spec;
}

// Per-coordinate double-well term g(v) = (v^2-1)^2 + 0.3 v. The 0.3 tilt
// makes the negative well the unique global minimum while keeping the
// nonglobal well at v ~ +0.96 as a genuine local trap.
double dw_g(double v) {
    const double q = v * v - 1.0;
    return q * q + 0.3 * v;
}
double dw_g1(double v) { return 4.0 * v * (v * v - 1.0) + 0.3; }
double dw_g2(double v) { return 12.0 * v * v - 4.0; }

// Global minimizer of g: the negative root of 4v^3 - 4v + 0.3 = 0, located
// by bisection and polished by Newton. Metadata is computed here rather than
// hard-coded.
double dw_minimizer() {
    double lo = -2.0, hi = -0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dw_g1(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double v = 0.5 * (lo + hi);
    for (int i = 0; i < 8; ++i) v -= dw_g1(v) / dw_g2(v);
    return v;
}

ObjectiveSpec make_double_well(int dim) {
    ObjectiveSpec spec;
    spec.name = "shifted_double_well";
    spec.dim = dim;
    spec.value = [](const Eigen::VectorXd& y) {
        double s = 0.0;
        for (int i = 0; i < y.size(); ++i) s += dw_g(y[i]);
        return s;
    };
    spec.gradient = [](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        Eigen::VectorXd g(y.size());
        for (int i = 0; i < y.size(); ++i) g[i] = dw_g1(y[i]);
        return g;
    };
    spec.hessian = [](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(y.size(), y.size());
        for (int i = 0; i < y.size(); ++i) h(i, i) = dw_g2(y[i]);
        return h;
    };
    const double vstar = dw_minimizer();
    spec.known_minimizer = Eigen::VectorXd::Constant(dim, vstar);
    spec.known_min_value = dim * dw_g(vstar);
    spec.known_hessian_at_min = Eigen::MatrixXd::Identity(dim, dim) * dw_g2(vstar);
    spec.coercivity_radius_hint = 2.5;
    return spec;
}

ObjectiveSpec make_rosenbrock(int dim) {
    ObjectiveSpec spec;
    spec.name = "rosenbrock";
    spec.dim = dim;
    spec.value = [](const Eigen::VectorXd& y) {
        double s = 0.0;
        for (int i = 0; i + 1 < y.size(); ++i) {
            const double a = y[i + 1] - y[i] * y[i];
            const double b = 1.0 - y[i];
            s += 100.0 * a * a + b * b;
        }
        return s;
    };
    spec.gradient = [](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(y.size());
        for (int i = 0; i + 1 < y.size(); ++i) {
            const double a = y[i + 1] - y[i] * y[i];
            g[i] += -400.0 * y[i] * a - 2.0 * (1.0 - y[i]);
            g[i + 1] += 200.0 * a;
        }
        return g;
    };
    spec.hessian = [](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(y.size(), y.size());
        for (int i = 0; i + 1 < y.size(); ++i) {
            h(i, i) += -400.0 * (y[i + 1] - 3.0 * y[i] * y[i]) + 2.0;
            h(i + 1, i + 1) += 200.0;
            h(i, i + 1) += -400.0 * y[i];
            h(i + 1, i) += -400.0 * y[i];
        }
        return h;
    };
    spec.known_min_value = 0.0;
    spec.known_minimizer = Eigen::VectorXd::Ones(dim);
    spec.known_hessian_at_min = spec.hessian(Eigen::VectorXd::Ones(dim));
    spec.coercivity_radius_hint = 3.0;
    return spec;
}

// Ackley with the Euclidean norm replaced by sqrt(|y|^2 + 1e-6), which
// restores C^2 regularity at the origin. The objective is bounded, so it
// violates the integrability assumption behind the exact formulas; it is
// flagged demo_only and never enters the verification suites.
ObjectiveSpec make_smoothed_ackley(int dim) {
    constexpr double eps = 1e-6;
    const double d = static_cast<double>(dim);
    ObjectiveSpec spec;
    spec.name = "smoothed_ackley";
    spec.dim = dim;
    spec.demo_only = true;
    spec.value = [d](const Eigen::VectorXd& y) {
        const double r = std::sqrt((y.squaredNorm() + eps) / d);
        double c = 0.0;
        for (int i = 0; i < y.size(); ++i) c += std::cos(2.0 * M_PI * y[i]);
        c /= d;
        return -20.0 * std::exp(-0.2 * r) - std::exp(c) + 20.0 + std::exp(1.0);
    };
    spec.gradient = [d](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        const double r = std::sqrt((y.squaredNorm() + eps) / d);
        double c = 0.0;
        for (int i = 0; i < y.size(); ++i) c += std::cos(2.0 * M_PI * y[i]);
        c /= d;
        const double ec = std::exp(c);
        Eigen::VectorXd g(y.size());
        for (int i = 0; i < y.size(); ++i) {
            const double dr = y[i] / (d * r);
            g[i] = 4.0 * std::exp(-0.2 * r) * dr + (2.0 * M_PI / d) * ec * std::sin(2.0 * M_PI * y[i]);
        }
        return g;
    };
    spec.hessian = [d](const Eigen::VectorXd& y) -> Eigen::MatrixXd {
        const int n = static_cast<int>(y.size());
        const double r = std::sqrt((y.squaredNorm() + eps) / d);
        double c = 0.0;
        for (int i = 0; i < n; ++i) c += std::cos(2.0 * M_PI * y[i]);
        c /= d;
        const double ec = std::exp(c);
        const double er = std::exp(-0.2 * r);
        Eigen::MatrixXd h(n, n);
        for (int i = 0; i < n; ++i) {
            const double dri = y[i] / (d * r);
            for (int j = 0; j < n; ++j) {
                const double drj = y[j] / (d * r);
                const double d2r = (i == j ? 1.0 / (d * r) : 0.0) - y[i] * y[j] / (d * d * r * r * r);
                double v = 4.0 * er * (d2r - 0.2 * dri * drj);
                v += -ec * (2.0 * M_PI / d) * (2.0 * M_PI / d) * std::sin(2.0 * M_PI * y[i]) *
                     std::sin(2.0 * M_PI * y[j]);
                if (i == j) v += ec * (4.0 * M_PI * M_PI / d) * std::cos(2.0 * M_PI * y[i]);
                h(i, j) = v;
            }
        }
        return h;
    };
    Eigen::VectorXd origin = Eigen::VectorXd::Zero(dim);
    spec.known_minimizer = origin;
    spec.known_min_value = spec.value(origin);
    spec.known_hessian_at_min = spec.hessian(origin);
    spec.coercivity_radius_hint = 0.27 * std::sqrt(d);
    return spec;
}

}  // namespace

ObjectiveSpec builtin_objective(const std::string& name, int dim) {
    if (dim < 1) throw validation_error("builtin_objective: dim must be >= 1");
    if (name == "iso_quadratic") {
        return make_quadratic(name, Eigen::MatrixXd::Identity(dim, dim), 2.0);
    }
    if (name == "aniso_quadratic") {
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) A(i, i) = static_cast<double>((i + 1) * (i + 1));
        return make_quadratic(name, A, 2.0);
    }
    if (name == "shifted_double_well") return make_double_well(dim);
    if (name == "rosenbrock") {
        if (dim < 2) throw validation_error("builtin_objective: rosenbrock requires dim >= 2");
        return make_rosenbrock(dim);
    }
    if (name == "smoothed_ackley") return make_smoothed_ackley(dim);
    throw validation_error("builtin_objective: unknown objective '" + name + "'");
}

std::vector<std::string> builtin_objective_names() {
    return {"iso_quadratic", "aniso_quadratic", "shifted_double_well", "rosenbrock", "smoothed_ackley"};
}

}  // namespace gibbsdrift
