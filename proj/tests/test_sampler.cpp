#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gibbsdrift/objectives.hpp"
#include "gibbsdrift/oracle.hpp"
#include "gibbsdrift/sampler.hpp"

using namespace gibbsdrift;

namespace {
Eigen::VectorXd vec1(double v) {
    Eigen::VectorXd x(1);
    x[0] = v;
    return x;
}
const ControlParams kBase(1.0, 0.5, 0.5, 0.01);

// plain mean of the Gaussian cloud a stream generates, mirroring the
// sampler's per-sample fork contract
Eigen::VectorXd plain_mean(const ControlParams& p, double t, const Eigen::VectorXd& x,
                           std::int64_t n, const RngStream& stream) {
    const double sigma = std::sqrt(p.heat_variance(t));
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.size());
    for (std::int64_t j = 0; j < n; ++j) {
        RngStream sj = stream.fork(static_cast<std::uint64_t>(j));
        for (int k = 0; k < x.size(); ++k) mean[k] += x[k] + sigma * sj.normal();
    }
    return mean / static_cast<double>(n);
}
}  // namespace

TEST_CASE("constant objective gives the plain sample mean and full ESS") {
    ObjectiveSpec flat;
    flat.name = "flat";
    flat.dim = 2;
    flat.value = [](const Eigen::VectorXd&) { return 1.25; };
    flat.gradient = [](const Eigen::VectorXd& y) { return Eigen::VectorXd::Zero(y.size()); };
    flat.hessian = [](const Eigen::VectorXd& y) {
        return Eigen::MatrixXd::Zero(y.size(), y.size()).eval();
    };
    Eigen::VectorXd x(2);
    x << 0.3, -0.7;
    RngStream stream(99);
    const auto est = sampler::mc_barycenter(flat, kBase, 0.2, x, 4096, stream);
    const Eigen::VectorXd mean = plain_mean(kBase, 0.2, x, 4096, stream);
    CHECK((est.estimate - mean).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(est.effective_sample_size == doctest::Approx(4096.0).epsilon(1e-9));
}

TEST_CASE("single sample returns that sample with ESS one") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    RngStream stream(5);
    const auto est = sampler::mc_barycenter(iso, kBase, 0.0, vec1(1.0), 1, stream);
    RngStream s0 = stream.fork(0);
    const double y0 = 1.0 + std::sqrt(kBase.heat_variance(0.0)) * s0.normal();
    CHECK(est.estimate[0] == doctest::Approx(y0).epsilon(1e-15));
    CHECK(est.effective_sample_size == doctest::Approx(1.0));
    CHECK(est.n_samples == 1);
    // degenerate approx_drift stays finite
    RngStream stream2(5);
    const Eigen::VectorXd u = sampler::approx_drift(iso, kBase, 0.0, vec1(1.0), 1, stream2);
    CHECK(std::isfinite(u[0]));
}

TEST_CASE("estimates are bit-identical for identical stream state") {
    const ObjectiveSpec dw = builtin_objective("shifted_double_well", 2);
    Eigen::VectorXd x(2);
    x << 0.4, -0.1;
    const auto e1 = sampler::mc_barycenter(dw, kBase, 0.1, x, 20000, RngStream(777));
    const auto e2 = sampler::mc_barycenter(dw, kBase, 0.1, x, 20000, RngStream(777));
    CHECK(e1.estimate[0] == e2.estimate[0]);
    CHECK(e1.estimate[1] == e2.estimate[1]);
    CHECK(e1.effective_sample_size == e2.effective_sample_size);
}

TEST_CASE("seed-mean of the barycenter estimator is consistent with the oracle") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    const int n_seeds = 30;
    const std::int64_t N = 100000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const auto est = sampler::mc_barycenter(iso, kBase, 0.0, vec1(1.0),
                                                N, RngStream::substream(1234, 0, s));
        sum += est.estimate[0];
        sum2 += est.estimate[0] * est.estimate[0];
        CHECK(est.effective_sample_size > 1.0);
        CHECK(est.effective_sample_size <= static_cast<double>(N));
    }
    const double mean = sum / n_seeds;
    const double sd = std::sqrt((sum2 / n_seeds - mean * mean) * n_seeds / (n_seeds - 1.0));
    CHECK(std::abs(mean - 1.0 / 3.0) <= 3.0 * sd / std::sqrt(static_cast<double>(n_seeds)));
}

TEST_CASE("seed-std scales like one over sqrt(N)") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    const int n_seeds = 30;
    std::vector<double> stds;
    for (std::int64_t N : {1000, 4000, 16000}) {
        double sum = 0.0, sum2 = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            const auto est = sampler::mc_barycenter(iso, kBase, 0.0, vec1(1.0), N,
                                                    RngStream::substream(888, N, s));
            sum += est.estimate[0];
            sum2 += est.estimate[0] * est.estimate[0];
        }
        const double mean = sum / n_seeds;
        stds.push_back(std::sqrt((sum2 / n_seeds - mean * mean) * n_seeds / (n_seeds - 1.0)));
    }
    CHECK(stds[0] / stds[1] >= 1.6);
    CHECK(stds[0] / stds[1] <= 2.4);
    CHECK(stds[1] / stds[2] >= 1.6);
    CHECK(stds[1] / stds[2] <= 2.4);
}

TEST_CASE("approx_drift seed-mean matches the closed-form drift") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    const int n_seeds = 30;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const Eigen::VectorXd u = sampler::approx_drift(iso, kBase, 0.0, vec1(1.0), 100000,
                                                        RngStream::substream(4321, 0, s));
        sum += u[0];
        sum2 += u[0] * u[0];
    }
    const double mean = sum / n_seeds;
    const double sd = std::sqrt((sum2 / n_seeds - mean * mean) * n_seeds / (n_seeds - 1.0));
    CHECK(std::abs(mean + 2.0 / 3.0) <= 3.0 * sd / std::sqrt(30.0));

    // zero-drift symmetry at the origin
    double sum0 = 0.0, sum02 = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
        const Eigen::VectorXd u = sampler::approx_drift(iso, kBase, 0.0, vec1(0.0), 20000,
                                                        RngStream::substream(4321, 1, s));
        sum0 += u[0];
        sum02 += u[0] * u[0];
    }
    const double mean0 = sum0 / n_seeds;
    const double sd0 = std::sqrt((sum02 / n_seeds - mean0 * mean0) * n_seeds / (n_seeds - 1.0));
    CHECK(std::abs(mean0) <= 3.0 * sd0 / std::sqrt(30.0));
}

TEST_CASE("errors and degenerate requests") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    CHECK_THROWS_AS(sampler::mc_barycenter(iso, kBase, 1.0, vec1(0.0), 10, RngStream(1)),
                    validation_error);
    CHECK_THROWS_AS(sampler::mc_barycenter(iso, kBase, 0.0, vec1(0.0), 0, RngStream(1)),
                    validation_error);
    const auto empty = sampler::sample_pi_lambda(iso, kBase, 0, RngStream(1));
    CHECK(empty.points.empty());
    const auto empty_h0 = sampler::sample_h0(iso, kBase, 0, RngStream(1));
    CHECK(empty_h0.points.empty());
    const ObjectiveSpec iso3 = builtin_objective("iso_quadratic", 3);
    CHECK_THROWS_AS(sampler::sample_pi_lambda(iso3, kBase, 10, RngStream(1)), validation_error);
}

TEST_CASE("pi sampler empirical variance matches the Gibbs target") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    const std::int64_t n = 100000;
    const auto draws = sampler::sample_pi_lambda(iso, kBase, n, RngStream(2026));
    REQUIRE(static_cast<std::int64_t>(draws.points.size()) == n);
    CHECK(draws.acceptance_rate > 0.2);
    double sum = 0.0, sum2 = 0.0;
    for (const auto& y : draws.points) {
        sum += y[0];
        sum2 += y[0] * y[0];
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // target variance 1/alpha = 0.5; var of the sample variance ~ 2 sigma^4 / n
    const double se_var = std::sqrt(2.0 / static_cast<double>(n)) * 0.5;
    CHECK(std::abs(var - 0.5) <= 3.0 * se_var);
    const double se_mean = std::sqrt(0.5 / static_cast<double>(n));
    CHECK(std::abs(mean) <= 3.0 * se_mean);
}

TEST_CASE("pi sampler concentrates near the global minimizer of the double well") {
    const ObjectiveSpec dw = builtin_objective("shifted_double_well", 1);
    const ControlParams p(1.0, 0.5, 0.05, 0.01);  // alpha = 20
    const Eigen::VectorXd xs = *dw.known_minimizer;
    // mass oracle from quadrature, computed before the sampling assertion
    const double mass = oracle::gibbs_ball_mass(dw, p, xs, 0.3, 1e-9);
    CHECK(mass > 0.95);
    const std::int64_t n = 20000;
    const auto draws = sampler::sample_pi_lambda(dw, p, n, RngStream(515));
    std::int64_t inside = 0;
    for (const auto& y : draws.points)
        if (std::abs(y[0] - xs[0]) <= 0.3) ++inside;
    const double frac = static_cast<double>(inside) / n;
    const double se = std::sqrt(mass * (1.0 - mass) / n);
    CHECK(frac >= mass - 3.0 * se - 1e-6);
    CHECK(frac > 0.95 - 3.0 * se);
}

TEST_CASE("h0 sampler variance adds the heat variance") {
    const ObjectiveSpec iso = builtin_objective("iso_quadratic", 1);
    const std::int64_t n = 100000;
    const auto draws = sampler::sample_h0(iso, kBase, n, RngStream(31337));
    double sum = 0.0, sum2 = 0.0;
    for (const auto& y : draws.points) {
        sum += y[0];
        sum2 += y[0] * y[0];
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    // Var = 1/alpha + 2 beta T = 0.5 + 1.0
    const double se_var = std::sqrt(2.0 / static_cast<double>(n)) * 1.5;
    CHECK(std::abs(var - 1.5) <= 3.0 * se_var);
    CHECK(std::abs(mean) <= 3.0 * std::sqrt(1.5 / static_cast<double>(n)));
}
