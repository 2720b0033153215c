#include "gibbsdrift/harness.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gibbsdrift/checks.hpp"
#include "gibbsdrift/errors.hpp"
#include "gibbsdrift/kernels.hpp"
#include "gibbsdrift/oracle.hpp"

namespace gibbsdrift::harness {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_time_tag(double t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, int expected_dim, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != expected_dim)
        throw validation_error(std::string(what) + ": expected an array of length dim");
    Eigen::VectorXd v(expected_dim);
    for (int i = 0; i < expected_dim; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw computation_error("cannot open " + path.string() + " for writing");
    out << text;
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

void write_manifest(const RunConfig& config, const std::vector<std::string>& artifacts) {
    nlohmann::json manifest = {
        {"mode", config.mode},
        {"seed", config.master_seed},
        {"artifacts", artifacts},
        {"created_utc", utc_now()},
        {"tool", "gibbs_drift"},
        {"version", "0.1.0"},
    };
    write_json_file(fs::path(config.output_dir) / "manifest.json", manifest);
}

fs::path prepare_run_dir(const RunConfig& config, const std::string& config_text) {
    if (config.output_dir.empty()) throw validation_error("output_dir must be set");
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    write_text_file(dir / "config.json", config_text);
    return dir;
}

ObjectiveSpec make_objective(const RunConfig& config) {
    return builtin_objective(config.objective_name, config.dim);
}

ControlParams make_params(const RunConfig& config) {
    return ControlParams(config.T, config.beta, config.lambda, config.delta);
}

// Fixed-box evaluator for objectives without an integrable Gibbs factor: the
// truncation box is derived from the requested plotting window instead of the
// coercivity-driven adaptive box.
oracle::GridEvaluator demo_box_evaluator(const ObjectiveSpec& obj, const ControlParams& params,
                                         const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    const Eigen::VectorXd center = 0.5 * (lo + hi);
    const double radius = 0.5 * (hi - lo).lpNorm<Eigen::Infinity>() * 1.5 +
                          3.0 * std::sqrt(params.heat_variance(0.0));
    const int panels = obj.dim == 1 ? 2048 : 512;
    return oracle::GridEvaluator(obj, params, make_uniform_grid(center, radius, panels));
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

RunConfig parse_run_config(const nlohmann::json& doc) {
    RunConfig config;
    config.raw = doc;
    try {
        const auto& obj = doc.at("objective");
        config.objective_name = obj.at("name").get<std::string>();
        config.dim = obj.at("dim").get<int>();
        const auto& p = doc.at("params");
        config.T = p.at("T").get<double>();
        config.beta = p.at("beta").get<double>();
        config.lambda = p.at("lambda").get<double>();
        config.delta = p.value("delta", -1.0);
        config.mode = doc.at("mode").get<std::string>();
        config.master_seed = doc.value("master_seed", 0ULL);
        config.output_dir = doc.value("output_dir", std::string());
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("config: ") + e.what());
    }

    // construct early so parameter validation fires before any computation
    const ObjectiveSpec objective = make_objective(config);
    (void)make_params(config);

    try {
        if (config.mode == "drift-field") {
            const auto& f = doc.at("drift_field");
            config.field_times = f.at("times").get<std::vector<double>>();
            config.field_grid_min = vector_from_json(f.at("grid_min"), config.dim, "grid_min");
            config.field_grid_max = vector_from_json(f.at("grid_max"), config.dim, "grid_max");
            config.field_grid_points = f.at("grid_points").get<int>();
            if (config.dim > 2) throw validation_error("drift-field requires dim <= 2");
            if (config.field_grid_points < 2) throw validation_error("grid_points must be >= 2");
            for (double t : config.field_times)
                if (!(t >= 0.0 && t < config.T)) throw validation_error("field times must be in [0, T)");
        } else if (config.mode == "optimize") {
            const auto& o = doc.at("optimize");
            config.provider.kind = integrator::drift_kind_from_string(o.at("provider").get<std::string>());
            config.provider.mc_samples = o.value("mc_samples", static_cast<std::int64_t>(1000));
            config.provider.oracle_tol = o.value("oracle_tol", 1e-8);
            if (o.contains("target"))
                config.provider.target = vector_from_json(o.at("target"), config.dim, "target");
            config.em_step = o.at("h").get<double>();
            config.n_traj = o.at("n_traj").get<int>();
            config.success_radius = o.value("success_radius", 0.3);
            config.write_trajectories = o.value("write_trajectories", false);
            const auto& init = o.at("init");
            const std::string kind = init.at("kind").get<std::string>();
            if (kind == "point") {
                config.init.kind = integrator::EnsembleInit::Kind::point;
                config.init.x0 = vector_from_json(init.at("point"), config.dim, "init.point");
            } else if (kind == "h0_sampler") {
                config.init.kind = integrator::EnsembleInit::Kind::h0_sampler;
            } else if (kind == "cloud") {
                config.init.kind = integrator::EnsembleInit::Kind::cloud;
                for (const auto& pt : init.at("points"))
                    config.init.cloud.push_back(vector_from_json(pt, config.dim, "init.points"));
            } else {
                throw validation_error("unknown init kind '" + kind + "'");
            }
            if (config.n_traj < 1) throw validation_error("n_traj must be >= 1");
        } else if (config.mode == "verify") {
            if (doc.contains("verify")) {
                const auto& v = doc.at("verify");
                if (v.contains("checks")) {
                    config.checks = v.at("checks").get<std::vector<std::string>>();
                    if (config.checks.size() == 1 && config.checks[0] == "all") config.checks.clear();
                }
            }
        } else if (config.mode == "sample-terminal") {
            const auto& s = doc.at("sample_terminal");
            config.terminal_times = s.at("times").get<std::vector<double>>();
            config.terminal_x = vector_from_json(s.at("x"), config.dim, "sample_terminal.x");
            config.terminal_grid_min = vector_from_json(s.at("grid_min"), config.dim, "grid_min");
            config.terminal_grid_max = vector_from_json(s.at("grid_max"), config.dim, "grid_max");
            config.terminal_grid_points = s.at("grid_points").get<int>();
            if (config.dim > 2) throw validation_error("sample-terminal requires dim <= 2");
            for (double t : config.terminal_times)
                if (!(t >= 0.0 && t < config.T))
                    throw validation_error("sample times must be in [0, T)");
        } else {
            throw validation_error("unknown mode '" + config.mode + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("config: ") + e.what());
    }

    if (objective.demo_only && config.mode == "verify")
        throw validation_error("demo-only objectives are not admitted to the verification suite");
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw validation_error(std::string("config parse error: ") + e.what());
    }
    return parse_run_config(doc);
}

void configure_threads(int cli_threads) {
    if (cli_threads > 0) {
        kernels::set_thread_count(cli_threads);
        return;
    }
    if (cli_threads == 0) return;  // auto
    if (const char* env = std::getenv("GIBBS_DRIFT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) kernels::set_thread_count(n);
    }
}

// ---------------------------------------------------------------------------
// commands

int cmd_drift_field(const RunConfig& config, const std::string& config_text) {
    const ObjectiveSpec obj = make_objective(config);
    const ControlParams params = make_params(config);
    const fs::path dir = prepare_run_dir(config, config_text);

    const int d = config.dim;
    const int n = config.field_grid_points;
    const Eigen::VectorXd& lo = config.field_grid_min;
    const Eigen::VectorXd& hi = config.field_grid_max;

    double log_M = 0.0;
    std::optional<oracle::GridEvaluator> demo_ge;
    if (obj.demo_only) {
        demo_ge.emplace(demo_box_evaluator(obj, params, lo, hi));
        log_M = demo_ge->log_gibbs_integral();
    } else if (!obj.quadratic_form) {
        log_M = oracle::partition_free_energy(obj, params, 1e-9).log_M;
    }

    std::vector<std::string> artifacts = {"config.json"};
    const std::int64_t n_points = d == 1 ? n : static_cast<std::int64_t>(n) * n;
    for (double t : config.field_times) {
        std::optional<oracle::GridEvaluator> shared;
        if (!obj.quadratic_form && !obj.demo_only) {
            std::vector<Eigen::VectorXd> anchors = {lo, hi, 0.5 * (lo + hi)};
            shared.emplace(oracle::make_shared_evaluator(obj, params, t, anchors, 1e-8));
        }
        const oracle::GridEvaluator* ge = obj.demo_only ? &*demo_ge : (shared ? &*shared : nullptr);

        std::vector<std::string> rows(static_cast<std::size_t>(n_points));
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t idx = 0; idx < n_points; ++idx) {
            Eigen::VectorXd x(d);
            if (d == 1) {
                x[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(idx) / (n - 1);
            } else {
                const std::int64_t i = idx / n, j = idx % n;
                x[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / (n - 1);
                x[1] = lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / (n - 1);
            }
            oracle::DriftEvaluation ev =
                obj.quadratic_form ? oracle::gaussian_closed_form(*obj.quadratic_form, params, t, x)
                                   : ge->evaluate(t, x, log_M);
            std::string row = fmt_double(x[0]);
            if (d == 2) row += "," + fmt_double(x[1]);
            row += "," + fmt_double(ev.phi);
            row += "," + fmt_double(ev.drift_u[0]);
            if (d == 2) row += "," + fmt_double(ev.drift_u[1]);
            rows[static_cast<std::size_t>(idx)] = std::move(row);
        }

        const std::string name = std::string("field_t") + fmt_time_tag(t) + ".csv";
        std::string csv = d == 1 ? "x1,phi,u1\n" : "x1,x2,phi,u1,u2\n";
        for (const auto& row : rows) csv += row + "\n";
        write_text_file(dir / name, csv);
        artifacts.push_back(name);
    }
    write_manifest(config, artifacts);
    return exit_ok;
}

int cmd_optimize(const RunConfig& config, const std::string& config_text) {
    const ObjectiveSpec obj = make_objective(config);
    const ControlParams params = make_params(config);
    const fs::path dir = prepare_run_dir(config, config_text);

    integrator::EnsembleResult result;
    try {
        result = integrator::em_ensemble(obj, params, config.provider, config.init, config.em_step,
                                         config.n_traj, config.master_seed, config.success_radius,
                                         config.write_trajectories);
    } catch (const std::exception& e) {
        nlohmann::json failure = {{"error", e.what()}};
        write_json_file(dir / "summary.json", failure);
        write_manifest(config, {"config.json", "summary.json"});
        throw;
    }
    const integrator::EnsembleSummary& s = result.summary;

    nlohmann::json summary = {
        {"provider", integrator::to_string(config.provider.kind)},
        {"h", config.em_step},
        {"n_traj", s.n_traj},
        {"n_failed", s.n_failed},
        {"all_failed", s.all_failed},
        {"mean_f_terminal", s.mean_f_terminal},
        {"mean_best_f_seen", s.mean_best_f_seen},
        {"success_fraction", s.success_fraction},
        {"success_radius", s.success_radius},
        {"clamped_steps_total", s.clamped_steps_total},
        {"low_ess_retries_total", s.low_ess_retries_total},
        {"histogram", {{"edges", s.histogram_edges}, {"counts", s.histogram_counts}}},
    };
    if (config.provider.kind == integrator::DriftKind::monte_carlo) {
        summary["ess_mean"] = s.ess_mean;
        summary["ess_min"] = s.ess_min;
        summary["mc_samples"] = config.provider.mc_samples;
    }
    write_json_file(dir / "summary.json", summary);

    std::vector<std::string> artifacts = {"config.json", "summary.json"};
    if (config.write_trajectories) {
        std::string csv = "trajectory,step,t,";
        for (int k = 0; k < config.dim; ++k) csv += "x" + std::to_string(k + 1) + ",";
        csv += "f\n";
        for (const auto& rec : result.records) {
            if (rec.failed) continue;
            for (std::size_t k = 0; k < rec.states.size(); ++k) {
                csv += std::to_string(rec.trajectory_index) + "," + std::to_string(k) + "," +
                       fmt_double(rec.times[k]);
                for (int c = 0; c < config.dim; ++c) csv += "," + fmt_double(rec.states[k][c]);
                csv += "," + fmt_double(obj.value(rec.states[k]));
                csv += "\n";
            }
        }
        write_text_file(dir / "trajectories.csv", csv);
        artifacts.push_back("trajectories.csv");
    }
    write_manifest(config, artifacts);
    if (s.all_failed) throw computation_error("all trajectories failed");
    return exit_ok;
}

int cmd_verify(const RunConfig& config, const std::string& config_text) {
    const fs::path dir = prepare_run_dir(config, config_text);
    checks::SuiteConfig suite;
    suite.checks = config.checks;
    suite.master_seed = config.master_seed;
    const std::vector<checks::CheckReport> reports = checks::run_full_suite(suite);
    write_json_file(dir / "reports.json", checks::reports_to_json(reports));
    write_manifest(config, {"config.json", "reports.json"});
    const bool all_passed =
        std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed; });
    return all_passed ? exit_ok : exit_verify_failed;
}

int cmd_sample_terminal(const RunConfig& config, const std::string& config_text) {
    const ObjectiveSpec obj = make_objective(config);
    const ControlParams params = make_params(config);
    const fs::path dir = prepare_run_dir(config, config_text);

    const int d = config.dim;
    const int n = config.terminal_grid_points;
    const Eigen::VectorXd& lo = config.terminal_grid_min;
    const Eigen::VectorXd& hi = config.terminal_grid_max;
    const Eigen::VectorXd& x = config.terminal_x;
    const double a = params.alpha();

    std::optional<oracle::GridEvaluator> demo_ge;
    if (obj.demo_only) demo_ge.emplace(demo_box_evaluator(obj, params, lo, hi));

    std::vector<std::string> artifacts = {"config.json"};
    nlohmann::json per_time = nlohmann::json::array();
    for (double t : config.terminal_times) {
        // L(t,x), barycenter and drift from the oracle
        double L;
        Eigen::VectorXd bary, drift;
        double cov_trace;
        if (obj.demo_only) {
            const oracle::DriftEvaluation ev = demo_ge->evaluate(t, x, 0.0);
            L = -a * ev.value_V;
            bary = ev.barycenter_a;
            drift = ev.drift_u;
            cov_trace = ev.covariance.trace();
        } else {
            const oracle::DriftEvaluation ev = oracle::evaluate_auto(obj, params, t, x, 1e-9);
            L = -a * ev.value_V;
            bary = ev.barycenter_a;
            drift = ev.drift_u;
            cov_trace = ev.covariance.trace();
        }

        const std::int64_t n_points = d == 1 ? n : static_cast<std::int64_t>(n) * n;
        std::string csv = d == 1 ? "y1,eta\n" : "y1,y2,eta\n";
        const double tau = params.horizon_T - t;
        const double log_pref = -0.5 * d * std::log(4.0 * M_PI * params.diffusivity_beta * tau);
        Eigen::VectorXd y(d);
        for (std::int64_t idx = 0; idx < n_points; ++idx) {
            if (d == 1) {
                y[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(idx) / (n - 1);
            } else {
                const std::int64_t i = idx / n, j = idx % n;
                y[0] = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / (n - 1);
                y[1] = lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / (n - 1);
            }
            const double log_eta = log_pref -
                                   (y - x).squaredNorm() / (4.0 * params.diffusivity_beta * tau) -
                                   a * obj.value(y) - L;
            csv += fmt_double(y[0]);
            if (d == 2) csv += "," + fmt_double(y[1]);
            csv += "," + fmt_double(std::exp(log_eta)) + "\n";
        }
        const std::string name = std::string("eta_t") + fmt_time_tag(t) + ".csv";
        write_text_file(dir / name, csv);
        artifacts.push_back(name);

        nlohmann::json entry = {{"t", t}, {"covariance_trace", cov_trace}};
        entry["barycenter"] = std::vector<double>(bary.data(), bary.data() + d);
        entry["drift"] = std::vector<double>(drift.data(), drift.data() + d);
        per_time.push_back(std::move(entry));
    }
    write_json_file(dir / "summary.json", nlohmann::json{{"times", per_time}});
    artifacts.push_back("summary.json");
    write_manifest(config, artifacts);
    return exit_ok;
}

int run_command(const RunConfig& config, const std::string& config_text) {
    if (config.mode == "drift-field") return cmd_drift_field(config, config_text);
    if (config.mode == "optimize") return cmd_optimize(config, config_text);
    if (config.mode == "verify") return cmd_verify(config, config_text);
    if (config.mode == "sample-terminal") return cmd_sample_terminal(config, config_text);
    throw validation_error("unknown mode '" + config.mode + "'");
}

}  // namespace gibbsdrift::harness
