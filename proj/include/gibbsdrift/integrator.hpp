#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gibbsdrift/control.hpp"
#include "gibbsdrift/objectives.hpp"
#include "gibbsdrift/rng.hpp"

namespace gibbsdrift::integrator {

enum class DriftKind { oracle, monte_carlo, affine_limit, langevin_baseline, zero };

DriftKind drift_kind_from_string(const std::string& s);
std::string to_string(DriftKind k);

struct DriftProvider {
    DriftKind kind = DriftKind::oracle;
    double oracle_tol = 1e-8;                // oracle
    std::int64_t mc_samples = 1000;          // monte_carlo: N
    std::optional<Eigen::VectorXd> target;   // affine_limit; defaults to known_minimizer
    double langevin_scale = -1.0;            // langevin_baseline; < 0 means T/lambda
};

struct TrajectoryRecord {
    std::int64_t trajectory_index = 0;
    std::vector<double> times;                 // t_k = k h, last <= T - delta
    std::vector<Eigen::VectorXd> states;       // same length as times
    std::vector<Eigen::VectorXd> drifts;       // one per step taken
    Eigen::VectorXd terminal_state;
    double best_f_seen = 0.0;
    double f_terminal = 0.0;
    int clamped_steps = 0;
    int low_ess_retries = 0;
    double ess_sum = 0.0;   // monte_carlo only
    double ess_min = 0.0;
    std::int64_t ess_count = 0;
    bool failed = false;
    int failure_step = -1;
    std::string failure;
};

// Euler-Maruyama on the grid t_k = k h, stopped at the largest t_k <= T - delta.
// Noise for (trajectory, step) comes from its own substream of master_seed, so
// records are bit-identical under any execution order. Per-step displacement
// h u is clamped at 10 sqrt(2 beta h) and the event counted. keep_paths=false
// drops per-step storage for large ensembles.
TrajectoryRecord em_run(const ObjectiveSpec& obj, const ControlParams& params,
                        const DriftProvider& provider, const Eigen::VectorXd& x0, double h,
                        std::uint64_t master_seed, std::int64_t trajectory_index,
                        bool keep_paths = true);

struct EnsembleInit {
    enum class Kind { point, h0_sampler, cloud };
    Kind kind = Kind::point;
    Eigen::VectorXd x0;                      // point
    std::vector<Eigen::VectorXd> cloud;      // cloud (size >= n_traj, used cyclically)
};

struct EnsembleSummary {
    int n_traj = 0;
    int n_failed = 0;
    bool all_failed = false;
    double mean_f_terminal = 0.0;
    double mean_best_f_seen = 0.0;
    double success_fraction = 0.0;  // |X_K - x*| <= success_radius, when x* known
    double success_radius = 0.0;
    std::int64_t clamped_steps_total = 0;
    std::int64_t low_ess_retries_total = 0;
    double ess_mean = 0.0;          // monte_carlo providers
    double ess_min = 0.0;
    std::vector<double> histogram_edges;   // terminal histogram (d=1: position, else distance to x*)
    std::vector<std::int64_t> histogram_counts;
};

struct EnsembleResult {
    std::vector<TrajectoryRecord> records;
    EnsembleSummary summary;
};

EnsembleResult em_ensemble(const ObjectiveSpec& obj, const ControlParams& params,
                           const DriftProvider& provider, const EnsembleInit& init, double h,
                           int n_traj, std::uint64_t master_seed, double success_radius = 0.3,
                           bool keep_paths = false);

}  // namespace gibbsdrift::integrator
