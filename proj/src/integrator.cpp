#include "gibbsdrift/integrator.hpp"

#include <algorithm>
#include <cmath>

#include "gibbsdrift/errors.hpp"
#include "gibbsdrift/oracle.hpp"
#include "gibbsdrift/sampler.hpp"

namespace gibbsdrift::integrator {

namespace {

// Salts separating the noise stream from the Monte-Carlo drift streams.
constexpr std::uint64_t kSaltNoise = 0x6E6F697365ULL;
constexpr std::uint64_t kSaltMcDrift = 0x6D635F6472696674ULL;
constexpr std::uint64_t kSaltMcRetry = 0x6D635F7265747279ULL;
constexpr std::uint64_t kSaltInit = 0x696E6974ULL;

struct StepDrift {
    Eigen::VectorXd u;
    double ess = -1.0;      // < 0: not a Monte-Carlo step
    bool low_ess_retry = false;
};

StepDrift drift_at(const ObjectiveSpec& obj, const ControlParams& params,
                   const DriftProvider& provider, double t, const Eigen::VectorXd& x,
                   std::uint64_t master_seed, std::int64_t traj, std::int64_t step) {
    StepDrift out;
    switch (provider.kind) {
        case DriftKind::zero:
            out.u = Eigen::VectorXd::Zero(obj.dim);
            break;
        case DriftKind::oracle:
            out.u = oracle::oracle_drift(obj, params, t, x, provider.oracle_tol);
            break;
        case DriftKind::affine_limit: {
            Eigen::VectorXd target;
            if (provider.target)
                target = *provider.target;
            else if (obj.known_minimizer)
                target = *obj.known_minimizer;
            else
                throw validation_error("affine_limit drift needs a target or a known minimizer");
            out.u = -(x - target) / (params.horizon_T - t);
            break;
        }
        case DriftKind::langevin_baseline: {
            const double scale = provider.langevin_scale > 0.0
                                     ? provider.langevin_scale
                                     : params.horizon_T / params.cost_lambda;
            out.u = -scale * obj.gradient(x);
            break;
        }
        case DriftKind::monte_carlo: {
            RngStream s = RngStream::substream(master_seed ^ kSaltMcDrift,
                                               static_cast<std::uint64_t>(traj),
                                               static_cast<std::uint64_t>(step));
            sampler::BarycenterEstimate est =
                sampler::mc_barycenter(obj, params, t, x, provider.mc_samples, s);
            if (est.low_ess) {
                // one retry with 4N on a distinct substream
                RngStream s2 = RngStream::substream(master_seed ^ kSaltMcRetry,
                                                    static_cast<std::uint64_t>(traj),
                                                    static_cast<std::uint64_t>(step));
                est = sampler::mc_barycenter(obj, params, t, x, 4 * provider.mc_samples, s2);
                out.low_ess_retry = true;
            }
            out.ess = est.effective_sample_size;
            out.u = -(x - est.estimate) / (params.horizon_T - t);
            break;
        }
    }
    return out;
}

}  // namespace

DriftKind drift_kind_from_string(const std::string& s) {
    if (s == "oracle") return DriftKind::oracle;
    if (s == "monte_carlo") return DriftKind::monte_carlo;
    if (s == "affine_limit") return DriftKind::affine_limit;
    if (s == "langevin_baseline") return DriftKind::langevin_baseline;
    if (s == "zero") return DriftKind::zero;
    throw validation_error("unknown drift provider '" + s + "'");
}

std::string to_string(DriftKind k) {
    switch (k) {
        case DriftKind::oracle: return "oracle";
        case DriftKind::monte_carlo: return "monte_carlo";
        case DriftKind::affine_limit: return "affine_limit";
        case DriftKind::langevin_baseline: return "langevin_baseline";
        case DriftKind::zero: return "zero";
    }
    return "?";
}

TrajectoryRecord em_run(const ObjectiveSpec& obj, const ControlParams& params,
                        const DriftProvider& provider, const Eigen::VectorXd& x0, double h,
                        std::uint64_t master_seed, std::int64_t trajectory_index, bool keep_paths) {
    const double T = params.horizon_T;
    const double delta = params.terminal_offset_delta;
    if (!(h > 0.0 && h <= (T - delta) / 4.0))
        throw validation_error("em_run: need 0 < h <= (T - delta)/4");
    if (!x0.allFinite()) throw validation_error("em_run: x0 must be finite");

    const int d = obj.dim;
    const std::int64_t K = static_cast<std::int64_t>(std::floor((T - delta) / h + 1e-9));
    const double clamp_cap = 10.0 * std::sqrt(2.0 * params.diffusivity_beta * h);
    const double root_2bh = std::sqrt(2.0 * params.diffusivity_beta * h);

    TrajectoryRecord rec;
    rec.trajectory_index = trajectory_index;
    if (keep_paths) {
        rec.times.reserve(static_cast<std::size_t>(K) + 1);
        rec.states.reserve(static_cast<std::size_t>(K) + 1);
        rec.drifts.reserve(static_cast<std::size_t>(K));
    }

    Eigen::VectorXd x = x0;
    rec.best_f_seen = obj.value(x);
    rec.ess_min = std::numeric_limits<double>::infinity();
    if (keep_paths) {
        rec.times.push_back(0.0);
        rec.states.push_back(x);
    }

    for (std::int64_t k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * h;
        StepDrift sd;
        try {
            sd = drift_at(obj, params, provider, t, x, master_seed, trajectory_index, k);
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.failure_step = static_cast<int>(k);
            rec.failure = std::string("drift provider failed: ") + e.what();
            break;
        }
        if (sd.ess >= 0.0) {
            rec.ess_sum += sd.ess;
            rec.ess_min = std::min(rec.ess_min, sd.ess);
            ++rec.ess_count;
        }
        if (sd.low_ess_retry) ++rec.low_ess_retries;

        // The displacement cap guards against low-N Monte-Carlo outliers; the
        // deterministic providers (and in particular the vanishing-noise
        // limit, where the cap would strangle any drift) are exempt.
        if (provider.kind == DriftKind::monte_carlo) {
            const double disp = h * sd.u.norm();
            if (disp > clamp_cap) {
                sd.u *= clamp_cap / disp;
                ++rec.clamped_steps;
            }
        }
        RngStream noise = RngStream::substream(master_seed ^ kSaltNoise,
                                               static_cast<std::uint64_t>(trajectory_index),
                                               static_cast<std::uint64_t>(k));
        for (int i = 0; i < d; ++i) x[i] += h * sd.u[i] + root_2bh * noise.normal();
        if (!x.allFinite()) {
            rec.failed = true;
            rec.failure_step = static_cast<int>(k);
            rec.failure = "non-finite state";
            break;
        }
        rec.best_f_seen = std::min(rec.best_f_seen, obj.value(x));
        if (keep_paths) {
            rec.times.push_back(static_cast<double>(k + 1) * h);
            rec.states.push_back(x);
            rec.drifts.push_back(sd.u);
        }
    }
    rec.terminal_state = x;
    rec.f_terminal = obj.value(x);
    if (rec.ess_count == 0) rec.ess_min = 0.0;
    return rec;
}

EnsembleResult em_ensemble(const ObjectiveSpec& obj, const ControlParams& params,
                           const DriftProvider& provider, const EnsembleInit& init, double h,
                           int n_traj, std::uint64_t master_seed, double success_radius,
                           bool keep_paths) {
    EnsembleResult out;
    out.summary.n_traj = n_traj;
    out.summary.success_radius = success_radius;
    if (n_traj <= 0) {
        out.summary.all_failed = true;
        return out;
    }

    // resolve initial points
    std::vector<Eigen::VectorXd> starts(static_cast<std::size_t>(n_traj));
    switch (init.kind) {
        case EnsembleInit::Kind::point:
            for (auto& s : starts) s = init.x0;
            break;
        case EnsembleInit::Kind::h0_sampler: {
            RngStream s = RngStream::substream(master_seed ^ kSaltInit, 0, 0);
            sampler::PiSamples draws = sampler::sample_h0(obj, params, n_traj, s);
            for (int i = 0; i < n_traj; ++i) starts[static_cast<std::size_t>(i)] = draws.points[i];
            break;
        }
        case EnsembleInit::Kind::cloud:
            if (init.cloud.empty()) throw validation_error("em_ensemble: empty init cloud");
            for (int i = 0; i < n_traj; ++i)
                starts[static_cast<std::size_t>(i)] = init.cloud[i % init.cloud.size()];
            break;
    }

    out.records.resize(static_cast<std::size_t>(n_traj));
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n_traj; ++i) {
        try {
            out.records[static_cast<std::size_t>(i)] =
                em_run(obj, params, provider, starts[static_cast<std::size_t>(i)], h, master_seed,
                       i, keep_paths);
        } catch (const std::exception& e) {
            TrajectoryRecord rec;
            rec.trajectory_index = i;
            rec.failed = true;
            rec.failure = e.what();
            rec.terminal_state = starts[static_cast<std::size_t>(i)];
            rec.f_terminal = std::numeric_limits<double>::quiet_NaN();
            rec.best_f_seen = std::numeric_limits<double>::quiet_NaN();
            out.records[static_cast<std::size_t>(i)] = std::move(rec);
        }
    }

    // Kahan-compensated means so the reduction is insensitive to ordering noise.
    double sum_f = 0.0, comp_f = 0.0, sum_b = 0.0, comp_b = 0.0;
    double ess_sum = 0.0;
    std::int64_t ess_count = 0;
    double ess_min = std::numeric_limits<double>::infinity();
    int ok = 0, success = 0;
    const Eigen::VectorXd* xstar =
        obj.known_minimizer ? &obj.known_minimizer.value() : nullptr;
    for (const auto& rec : out.records) {
        if (rec.failed) {
            ++out.summary.n_failed;
            continue;
        }
        ++ok;
        double yf = rec.f_terminal - comp_f;
        double tf = sum_f + yf;
        comp_f = (tf - sum_f) - yf;
        sum_f = tf;
        double yb = rec.best_f_seen - comp_b;
        double tb = sum_b + yb;
        comp_b = (tb - sum_b) - yb;
        sum_b = tb;
        out.summary.clamped_steps_total += rec.clamped_steps;
        out.summary.low_ess_retries_total += rec.low_ess_retries;
        ess_sum += rec.ess_sum;
        ess_count += rec.ess_count;
        if (rec.ess_count > 0) ess_min = std::min(ess_min, rec.ess_min);
        if (xstar != nullptr && (rec.terminal_state - *xstar).norm() <= success_radius) ++success;
    }
    if (ok == 0) {
        out.summary.all_failed = true;
        return out;
    }
    out.summary.mean_f_terminal = sum_f / ok;
    out.summary.mean_best_f_seen = sum_b / ok;
    out.summary.success_fraction = static_cast<double>(success) / ok;
    out.summary.ess_mean = ess_count > 0 ? ess_sum / static_cast<double>(ess_count) : 0.0;
    out.summary.ess_min = ess_count > 0 ? ess_min : 0.0;

    // terminal histogram: position for d = 1, distance to x* (or origin) otherwise
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(ok));
    for (const auto& rec : out.records) {
        if (rec.failed) continue;
        if (obj.dim == 1)
            vals.push_back(rec.terminal_state[0]);
        else if (xstar != nullptr)
            vals.push_back((rec.terminal_state - *xstar).norm());
        else
            vals.push_back(rec.terminal_state.norm());
    }
    const auto [mn_it, mx_it] = std::minmax_element(vals.begin(), vals.end());
    double lo = *mn_it, hi = *mx_it;
    if (hi <= lo) hi = lo + 1.0;
    const int nbins = 64;
    out.summary.histogram_edges.resize(nbins + 1);
    out.summary.histogram_counts.assign(nbins, 0);
    for (int b = 0; b <= nbins; ++b)
        out.summary.histogram_edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / nbins;
    for (double v : vals) {
        int b = static_cast<int>((v - lo) / (hi - lo) * nbins);
        b = std::clamp(b, 0, nbins - 1);
        ++out.summary.histogram_counts[static_cast<std::size_t>(b)];
    }
    return out;
}

}  // namespace gibbsdrift::integrator
