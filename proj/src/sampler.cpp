#include "gibbsdrift/sampler.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "gibbsdrift/errors.hpp"
#include "gibbsdrift/kernels.hpp"
#include "gibbsdrift/oracle.hpp"

namespace gibbsdrift::sampler {

BarycenterEstimate mc_barycenter(const ObjectiveSpec& obj, const ControlParams& params, double t,
                                 const Eigen::VectorXd& x, std::int64_t n, RngStream stream) {
    if (!(t < params.horizon_T)) throw validation_error("mc_barycenter: t must be < T");
    if (n < 1) throw validation_error("mc_barycenter: need at least one sample");
    const int d = obj.dim;
    const double sigma = std::sqrt(params.heat_variance(t));
    const double a = params.alpha();

    // materialize points and log-weights once; reductions then run on arrays
    std::vector<double> pts(static_cast<std::size_t>(n) * d);
    std::vector<double> lw(static_cast<std::size_t>(n));
    bool bad_value = false;
#pragma omp parallel for schedule(static) reduction(|| : bad_value)
    for (std::int64_t j = 0; j < n; ++j) {
        RngStream sj = stream.fork(static_cast<std::uint64_t>(j));
        Eigen::Map<Eigen::VectorXd> y(pts.data() + static_cast<std::size_t>(j) * d, d);
        for (int k = 0; k < d; ++k) y[k] = x[k] + sigma * sj.normal();
        const double fy = obj.value(y);
        bad_value = bad_value || !std::isfinite(fy);
        lw[static_cast<std::size_t>(j)] = -a * fy;
    }
    if (bad_value) throw computation_error("mc_barycenter: objective returned non-finite value");

    const double m = kernels::max_reduce(n, [&](std::int64_t j) { return lw[static_cast<std::size_t>(j)]; });
    std::vector<double> acc(static_cast<std::size_t>(2 + d));
    kernels::accumulate(n, 2 + d, [&](std::int64_t j, double* out) {
        const double w = std::exp(lw[static_cast<std::size_t>(j)] - m);
        out[0] += w;
        out[1] += w * w;
        const double* p = pts.data() + static_cast<std::size_t>(j) * d;
        for (int k = 0; k < d; ++k) out[2 + k] += w * (p[k] - x[k]);
    }, acc.data());

    BarycenterEstimate est;
    est.n_samples = n;
    est.estimate.resize(d);
    for (int k = 0; k < d; ++k) est.estimate[k] = x[k] + acc[2 + k] / acc[0];
    est.effective_sample_size = acc[0] * acc[0] / acc[1];
    est.low_ess = est.effective_sample_size < 10.0;
    return est;
}

Eigen::VectorXd approx_drift(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, std::int64_t n, RngStream stream) {
    const BarycenterEstimate est = mc_barycenter(obj, params, t, x, n, stream);
    return -(x - est.estimate) / (params.horizon_T - t);
}

PiSamples sample_pi_lambda(const ObjectiveSpec& obj, const ControlParams& params, std::int64_t n,
                           RngStream stream, double tol) {
    if (obj.dim > 2) throw validation_error("sample_pi_lambda: rejection sampler limited to dim <= 2");
    if (n < 0) throw validation_error("sample_pi_lambda: n must be >= 0");
    PiSamples out;
    if (n == 0) return out;

    const int d = obj.dim;
    const double a = params.alpha();
    const oracle::GibbsMoments mom = oracle::gibbs_moments(obj, params, tol);

    // Proposal N(mean, kappa * cov). A kappa matched to the dominant mode can
    // make the envelope constant astronomical when secondary wells carry
    // stray mass (Gaussian tails lose against e^{-alpha f} there), so kappa
    // is doubled until the grid-validated envelope implies an acceptance
    // bound log M - log C above log(0.01).
    double kappa = 2.0;
    Eigen::MatrixXd prop_cov;
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_norm = 0.0;
    double log_C = 0.0;
    const auto log_q = [&](const Eigen::VectorXd& y) {
        return log_norm - 0.5 * llt.matrixL().solve(y - mom.mean).squaredNorm();
    };
    for (int widen = 0;; ++widen) {
        prop_cov = kappa * mom.cov;
        llt.compute(prop_cov);
        if (llt.info() != Eigen::Success)
            throw computation_error("sample_pi_lambda: proposal covariance not positive definite");
        double logdet = 0.0;
        for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
        log_norm = -0.5 * d * std::log(2.0 * M_PI) - 0.5 * logdet;

        // envelope constant validated on a grid: log C >= -alpha f - log q
        const QuadratureGrid grid = make_uniform_grid(
            mom.mean,
            6.0 * std::sqrt(prop_cov.diagonal().maxCoeff()) + obj.coercivity_radius_hint, 256);
        log_C = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd y(d);
        const std::int64_t m = grid.node_count();
        for (std::int64_t i = 0; i < m; ++i) {
            grid.point_at(i, y);
            log_C = std::max(log_C, -a * obj.value(y) - log_q(y));
        }
        log_C += std::log(1.2);  // safety margin over the grid maximum
        if (mom.log_M - log_C >= std::log(0.01)) break;
        if (widen >= 24)
            throw computation_error("sample_pi_lambda: no workable Gaussian envelope found");
        kappa *= 2.0;
    }
    const Eigen::MatrixXd chol = llt.matrixL();

    for (int attempt = 0; attempt < 2; ++attempt) {
        out.points.clear();
        out.points.reserve(static_cast<std::size_t>(n));
        out.proposals = 0;
        bool violated = false;
        Eigen::VectorXd z(d), y(d);
        while (static_cast<std::int64_t>(out.points.size()) < n) {
            ++out.proposals;
            if (out.proposals > 10000 * (n + 16))
                throw computation_error("sample_pi_lambda: acceptance rate vanished");
            for (int k = 0; k < d; ++k) z[k] = stream.normal();
            y = mom.mean + chol * z;
            const double log_ratio = -a * obj.value(y) - log_q(y) - log_C;
            if (log_ratio > 0.0) {  // envelope violated: inflate x10, restart once
                violated = true;
                break;
            }
            if (std::log(stream.uniform01()) < log_ratio) out.points.push_back(y);
        }
        if (!violated) {
            out.acceptance_rate =
                static_cast<double>(out.points.size()) / static_cast<double>(out.proposals);
            return out;
        }
        log_C += std::log(10.0);
    }
    throw computation_error("sample_pi_lambda: envelope violated after inflation");
}

PiSamples sample_h0(const ObjectiveSpec& obj, const ControlParams& params, std::int64_t n,
                    RngStream stream, double tol) {
    PiSamples out = sample_pi_lambda(obj, params, n, stream.fork(1), tol);
    RngStream noise = stream.fork(2);
    const double s = std::sqrt(2.0 * params.diffusivity_beta * params.horizon_T);
    for (auto& y : out.points)
        for (int k = 0; k < obj.dim; ++k) y[k] += s * noise.normal();
    return out;
}

}  // namespace gibbsdrift::sampler
