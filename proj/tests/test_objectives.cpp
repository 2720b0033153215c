#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gibbsdrift/errors.hpp"
#include "gibbsdrift/objectives.hpp"
#include "gibbsdrift/rng.hpp"

using namespace gibbsdrift;

namespace {

// centered finite differences of value against the hand-coded gradient
double max_gradient_fd_error(const ObjectiveSpec& obj, RngStream& rng, int n_points) {
    const double R = obj.coercivity_radius_hint;
    const Eigen::VectorXd center =
        obj.known_minimizer ? *obj.known_minimizer : Eigen::VectorXd::Zero(obj.dim);
    double worst = 0.0;
    for (int i = 0; i < n_points; ++i) {
        Eigen::VectorXd x(obj.dim);
        for (int k = 0; k < obj.dim; ++k) x[k] = center[k] + R * (2.0 * rng.uniform01() - 1.0);
        const Eigen::VectorXd g = obj.gradient(x);
        const double h = 1e-6 * std::max(1.0, x.norm());
        for (int k = 0; k < obj.dim; ++k) {
            Eigen::VectorXd xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const double fd = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - g[k]) / (1.0 + std::abs(g[k])));
        }
    }
    return worst;
}

double max_hessian_fd_error(const ObjectiveSpec& obj, RngStream& rng, int n_points) {
    const double R = obj.coercivity_radius_hint;
    const Eigen::VectorXd center =
        obj.known_minimizer ? *obj.known_minimizer : Eigen::VectorXd::Zero(obj.dim);
    double worst = 0.0;
    for (int i = 0; i < n_points; ++i) {
        Eigen::VectorXd x(obj.dim);
        for (int k = 0; k < obj.dim; ++k) x[k] = center[k] + R * (2.0 * rng.uniform01() - 1.0);
        const Eigen::MatrixXd H = obj.hessian(x);
        const double h = 1e-5 * std::max(1.0, x.norm());
        for (int k = 0; k < obj.dim; ++k) {
            Eigen::VectorXd xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const Eigen::VectorXd fd = (obj.gradient(xp) - obj.gradient(xm)) / (2.0 * h);
            for (int r = 0; r < obj.dim; ++r)
                worst = std::max(worst, std::abs(fd[r] - H(r, k)) / (1.0 + std::abs(H(r, k))));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("derivatives match finite differences for every builtin") {
    RngStream rng(91);
    struct Cfg {
        const char* name;
        int dim;
    };
    for (const Cfg cfg : {Cfg{"iso_quadratic", 1}, Cfg{"iso_quadratic", 3},
                          Cfg{"aniso_quadratic", 2}, Cfg{"shifted_double_well", 2},
                          Cfg{"rosenbrock", 2}, Cfg{"rosenbrock", 3}, Cfg{"smoothed_ackley", 2}}) {
        CAPTURE(cfg.name);
        CAPTURE(cfg.dim);
        const ObjectiveSpec obj = builtin_objective(cfg.name, cfg.dim);
        CHECK(max_gradient_fd_error(obj, rng, 100) < 1e-5);
        CHECK(max_hessian_fd_error(obj, rng, 100) < 1e-4);
    }
}

TEST_CASE("minimizer metadata is consistent") {
    for (const char* name :
         {"iso_quadratic", "aniso_quadratic", "shifted_double_well", "rosenbrock"}) {
        for (int dim : {2, 3}) {
            CAPTURE(name);
            const ObjectiveSpec obj = builtin_objective(name, dim);
            REQUIRE(obj.known_minimizer.has_value());
            REQUIRE(obj.known_min_value.has_value());
            CHECK(obj.gradient(*obj.known_minimizer).norm() <= 1e-10);
            CHECK(obj.value(*obj.known_minimizer) ==
                  doctest::Approx(*obj.known_min_value).epsilon(1e-12));
        }
    }
}

TEST_CASE("values are bounded below by the registered minimum") {
    RngStream rng(17);
    for (const char* name :
         {"iso_quadratic", "aniso_quadratic", "shifted_double_well", "rosenbrock",
          "smoothed_ackley"}) {
        const ObjectiveSpec obj = builtin_objective(name, 2);
        for (int i = 0; i < 500; ++i) {
            Eigen::VectorXd x(2);
            for (int k = 0; k < 2; ++k) x[k] = -4.0 + 8.0 * rng.uniform01();
            CHECK(obj.value(x) >= *obj.known_min_value - 1e-12);
        }
    }
}

TEST_CASE("iso quadratic evaluates as half the squared norm") {
    const ObjectiveSpec obj1 = builtin_objective("iso_quadratic", 1);
    Eigen::VectorXd x(1);
    x[0] = 2.0;
    CHECK(obj1.value(x) == doctest::Approx(2.0));
    CHECK(obj1.gradient(x)[0] == doctest::Approx(2.0));
    CHECK(*obj1.known_min_value == 0.0);
    CHECK((*obj1.known_minimizer)[0] == 0.0);

    const ObjectiveSpec obj3 = builtin_objective("iso_quadratic", 3);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    CHECK(obj3.value(zero) == 0.0);
    CHECK(obj3.gradient(zero).norm() == 0.0);
}

TEST_CASE("aniso quadratic uses diag(1, 4, 9, ...)") {
    const ObjectiveSpec obj = builtin_objective("aniso_quadratic", 3);
    REQUIRE(obj.quadratic_form.has_value());
    CHECK((*obj.quadratic_form)(0, 0) == 1.0);
    CHECK((*obj.quadratic_form)(1, 1) == 4.0);
    CHECK((*obj.quadratic_form)(2, 2) == 9.0);
}

TEST_CASE("double well minimizer solves the stationarity cubic") {
    const ObjectiveSpec obj = builtin_objective("shifted_double_well", 1);
    // independent oracle: bisection on g'(v) = 4v^3 - 4v + 0.3 over [-2, -0.5]
    const auto g1 = [](double v) { return 4.0 * v * v * v - 4.0 * v + 0.3; };
    double lo = -2.0, hi = -0.5;
    REQUIRE(g1(lo) < 0.0);
    REQUIRE(g1(hi) > 0.0);
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g1(mid) < 0.0 ? lo : hi) = mid;
    }
    const double root = 0.5 * (lo + hi);
    CHECK((*obj.known_minimizer)[0] == doctest::Approx(root).epsilon(1e-12));
    const double q = root * root - 1.0;
    CHECK(*obj.known_min_value == doctest::Approx(q * q + 0.3 * root).epsilon(1e-12));
}

TEST_CASE("double well has exactly three stationary points in d=1") {
    const ObjectiveSpec obj = builtin_objective("shifted_double_well", 1);
    int sign_changes = 0;
    const int n = 4000;
    double prev = obj.gradient(Eigen::VectorXd::Constant(1, -2.0))[0];
    for (int i = 1; i <= n; ++i) {
        const double v = -2.0 + 4.0 * i / n;
        const double g = obj.gradient(Eigen::VectorXd::Constant(1, v))[0];
        if ((g > 0.0) != (prev > 0.0)) ++sign_changes;
        prev = g;
    }
    CHECK(sign_changes == 3);
    // the global minimizer lies in the negative well
    CHECK((*obj.known_minimizer)[0] < 0.0);
}

TEST_CASE("coercivity radius hint is honest") {
    for (const char* name : {"iso_quadratic", "aniso_quadratic", "shifted_double_well"}) {
        const ObjectiveSpec obj = builtin_objective(name, 2);
        const Eigen::VectorXd xs = *obj.known_minimizer;
        RngStream rng(5);
        for (int i = 0; i < 200; ++i) {
            Eigen::VectorXd dir(2);
            for (int k = 0; k < 2; ++k) dir[k] = rng.normal();
            dir.normalize();
            const double r = obj.coercivity_radius_hint * (1.0 + 2.0 * rng.uniform01());
            CHECK(obj.value(xs + r * dir) >= *obj.known_min_value + 1.0);
        }
    }
}

TEST_CASE("smoothed ackley is demo-only, others are not") {
    CHECK(builtin_objective("smoothed_ackley", 2).demo_only);
    CHECK_FALSE(builtin_objective("iso_quadratic", 2).demo_only);
    CHECK_FALSE(builtin_objective("shifted_double_well", 2).demo_only);
}

TEST_CASE("unknown names and bad dimensions are rejected") {
    CHECK_THROWS_AS(builtin_objective("banana", 2), validation_error);
    CHECK_THROWS_AS(builtin_objective("rosenbrock", 1), validation_error);
    CHECK_THROWS_AS(builtin_objective("iso_quadratic", 0), validation_error);
}
