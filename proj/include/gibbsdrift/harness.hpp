#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gibbsdrift/integrator.hpp"
#include "gibbsdrift/objectives.hpp"

namespace gibbsdrift::harness {

// Exit codes shared by the library entry points and the CLI.
inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_computation = 2;
inline constexpr int exit_verify_failed = 3;

struct RunConfig {
    std::string objective_name;
    int dim = 1;
    double T = 1.0, beta = 0.5, lambda = 0.5, delta = -1.0;
    std::string mode;
    std::uint64_t master_seed = 0;
    std::string output_dir;

    // drift-field
    std::vector<double> field_times;
    Eigen::VectorXd field_grid_min, field_grid_max;
    int field_grid_points = 64;

    // optimize
    integrator::DriftProvider provider;
    integrator::EnsembleInit init;
    double em_step = 1e-3;
    int n_traj = 100;
    double success_radius = 0.3;
    bool write_trajectories = false;

    // verify
    std::vector<std::string> checks;  // empty = all

    // sample-terminal
    std::vector<double> terminal_times;
    Eigen::VectorXd terminal_x;
    Eigen::VectorXd terminal_grid_min, terminal_grid_max;
    int terminal_grid_points = 128;

    nlohmann::json raw;  // verbatim parsed input
};

// Parses and validates a configuration document; throws validation_error.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

// Apply --threads / GIBBS_DRIFT_THREADS (cli_threads < 0 means "not given",
// 0 means auto).
void configure_threads(int cli_threads);

// Each command writes config.json (verbatim input bytes), manifest.json and
// its outputs into config.output_dir, and returns a process exit code.
int cmd_drift_field(const RunConfig& config, const std::string& config_text);
int cmd_optimize(const RunConfig& config, const std::string& config_text);
int cmd_verify(const RunConfig& config, const std::string& config_text);
int cmd_sample_terminal(const RunConfig& config, const std::string& config_text);

int run_command(const RunConfig& config, const std::string& config_text);

}  // namespace gibbsdrift::harness
