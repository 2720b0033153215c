#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gibbsdrift/control.hpp"
#include "gibbsdrift/objectives.hpp"

namespace gibbsdrift::checks {

// One verifiable fact: pass iff |measured - reference| <= tolerance.
// One-sided assertions are encoded as centered bands on the admissible
// interval; the notes of the owning report say which convention is in use.
struct ObservedRow {
    std::string parameter_point;
    double measured = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;

    bool within() const { return std::abs(measured - reference) <= tolerance; }
};

struct CheckReport {
    std::string check_name;
    bool passed = true;
    std::vector<ObservedRow> observed;
    std::string notes;

    void add(std::string param, double measured, double reference, double tolerance);
    // one-sided helpers, encoded as centered bands
    void add_at_most(std::string param, double measured, double upper);          // [-inf-ish, upper] -> [0-centered band]
    void add_in_band(std::string param, double measured, double lo, double hi);  // [lo, hi]
    void merge(const CheckReport& other);
};

nlohmann::json report_to_json(const CheckReport& report);
nlohmann::json reports_to_json(const std::vector<CheckReport>& reports);

// ---- individual checks (parameters as in the defaults used by the suite) ----

CheckReport check_terminal_limit(const ObjectiveSpec& obj, const ControlParams& params,
                                 const std::vector<Eigen::VectorXd>& probe_xs,
                                 const std::vector<double>& t_list, double tol = 1e-8);

struct TimePoint {
    double t;
    Eigen::VectorXd x;
};

// lambda_list drives the decrease and final-gap assertions; the [0.3, 0.7]
// Laplace-rate band is asserted on rate_band_lambdas (defaults to
// lambda_list when empty). On multi-well objectives the first ladder may
// cross the metastable transient where e^{-c/lambda} well-switching, not the
// O(lambda) Laplace rate, dominates |a - x*|; the band ladder must then sit
// in the Laplace window.
CheckReport check_low_lambda(const ObjectiveSpec& obj, const ControlParams& params_base,
                             const std::vector<double>& lambda_list,
                             const std::vector<TimePoint>& probes,
                             const std::vector<double>& rate_band_lambdas = {},
                             double tol = 1e-8);

CheckReport check_laplace(const ObjectiveSpec& obj, const ControlParams& params_base,
                          const std::vector<double>& lambda_list,
                          const std::vector<TimePoint>& probes, double tol = 1e-9);

CheckReport check_concentration_tails(const ObjectiveSpec& obj, const ControlParams& params_base,
                                      const std::vector<double>& lambda_list,
                                      const std::vector<double>& r_list,
                                      const std::vector<TimePoint>& probes, double tol = 1e-9);

CheckReport check_partition_and_monotone(const ObjectiveSpec& obj, const ControlParams& params_base,
                                         const std::vector<double>& lambda_list,
                                         std::uint64_t seed, double tol = 1e-9);

CheckReport check_non_commute(const ObjectiveSpec& obj, const ControlParams& params,
                              const Eigen::VectorXd& x, double tol = 1e-8);

// structural identities of the exact oracle
CheckReport check_oracle_agreement(std::uint64_t seed);
CheckReport check_three_forms(std::uint64_t seed);
CheckReport check_jacobian_covariance(std::uint64_t seed);
CheckReport check_hjb_residual(std::uint64_t seed);
CheckReport check_osl_bounds(std::uint64_t seed);
CheckReport check_chapman_kolmogorov();
CheckReport check_covariance_expansion();
CheckReport check_moreau_warmup();

// ---- suite ----

struct SuiteConfig {
    std::vector<std::string> checks;  // empty = all
    std::uint64_t master_seed = 20260809;
};

std::vector<std::string> suite_check_names();
// Runs the selected checks with default parameters; throws validation_error
// on an unknown check name. Individual check failures are aggregated, never
// fatal.
std::vector<CheckReport> run_full_suite(const SuiteConfig& config);

}  // namespace gibbsdrift::checks
