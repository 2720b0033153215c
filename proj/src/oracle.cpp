#include "gibbsdrift/oracle.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "gibbsdrift/gibbs_core.hpp"
#include "gibbsdrift/kernels.hpp"

namespace gibbsdrift::oracle {

namespace {

constexpr int kMinPanels = 64;

int max_panels_for_dim(int dim) {
    switch (dim) {
        case 1: return 8192;
        case 2: return 2048;
        default: return 128;
    }
}

struct BoxSpec {
    Eigen::VectorXd center;
    double radius = 0.0;
    double neglected_mass_bound = 0.0;
};

// Log of the unnormalized integrand without constant prefactors; heat==false
// drops the Gaussian factor (partition-function case, xs ignored).
double log_integrand(const ObjectiveSpec& obj, const ControlParams& params, bool heat, double t,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    double s = -params.alpha() * obj.value(y);
    if (heat) s -= (y - x).squaredNorm() / (4.0 * params.diffusivity_beta * (params.horizon_T - t));
    return s;
}

// Pick a box containing all evaluation anchors and x* (when known), then grow
// it until the integrand at the boundary, multiplied by the box volume, is
// below tol relative to the best interior value, for every anchor. Coercivity
// makes the loop terminate; for demo objectives the bound is recorded and the
// last box accepted.
BoxSpec choose_box(const ObjectiveSpec& obj, const ControlParams& params, bool heat, double t,
                   const std::vector<Eigen::VectorXd>& xs, double tol) {
    const int d = obj.dim;
    if (obj.demo_only && !heat)
        throw computation_error("choose_box: Gibbs factor of a demo-only objective is not integrable");

    std::vector<Eigen::VectorXd> anchors = xs;
    if (obj.known_minimizer) anchors.push_back(*obj.known_minimizer);
    if (anchors.empty()) anchors.push_back(Eigen::VectorXd::Zero(d));
    // heat centers: the anchors themselves in the partition case
    const std::vector<Eigen::VectorXd>& centers = heat ? xs : anchors;

    Eigen::VectorXd lo = anchors[0], hi = anchors[0];
    for (const auto& p : anchors) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    BoxSpec box;
    box.center = 0.5 * (lo + hi);
    const double halfspan = (hi - lo).lpNorm<Eigen::Infinity>() * 0.5;

    // Initial margin by standard-deviation bookkeeping: the Gaussian scale
    // sqrt(2 beta (T-t)) and the Gibbs scale 1/sqrt(alpha). Deep in the
    // low-temperature regime the mass sits in wells of width
    // 1/sqrt(alpha h_min), and a 6-heat-sd box would waste the node budget;
    // there the box starts tight and the decay criterion below grows it if
    // anything was clipped.
    const double a = params.alpha();
    double h_min = 1.0;
    if (obj.known_hessian_at_min) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*obj.known_hessian_at_min);
        h_min = std::max(es.eigenvalues().minCoeff(), 1e-6);
    }
    double margin;
    if (heat) {
        const double sigma_heat = std::sqrt(params.heat_variance(t));
        if (a <= 100.0)
            margin = std::max(6.0 * sigma_heat, 6.0 / std::sqrt(a));
        else
            margin = std::max(0.5, std::min(6.0 * sigma_heat, 6.0 / std::sqrt(a * h_min)));
    } else {
        if (a <= 100.0)
            margin = std::max(obj.coercivity_radius_hint, 6.0 / std::sqrt(a));
        else
            margin = std::max(0.25, 6.0 / std::sqrt(a * h_min));
    }
    box.radius = halfspan + margin;

    double interior = -std::numeric_limits<double>::infinity();
    for (const auto& c : centers)
        for (const auto& p : anchors)
            interior = std::max(interior, log_integrand(obj, params, heat, t, c, p));

    const double log_tol = std::log(std::min(tol, 1e-8));
    for (int grow = 0; grow < 80; ++grow) {
        // probe the 2d face centers and the 2^d corners with every heat center
        double boundary = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd probe(d);
        const auto probe_all = [&](const Eigen::VectorXd& b) {
            for (const auto& c : centers)
                boundary = std::max(boundary, log_integrand(obj, params, heat, t, c, b));
        };
        for (int a = 0; a < d; ++a) {
            for (int sgn : {-1, 1}) {
                probe = box.center;
                probe[a] += sgn * box.radius;
                probe_all(probe);
            }
        }
        for (int mask = 0; mask < (1 << d); ++mask) {
            for (int a = 0; a < d; ++a)
                probe[a] = box.center[a] + ((mask >> a) & 1 ? box.radius : -box.radius);
            probe_all(probe);
        }
        const double log_volume = d * std::log(2.0 * box.radius);
        box.neglected_mass_bound = std::exp(boundary + log_volume - interior);
        if (boundary + log_volume <= interior + log_tol) return box;
        box.radius *= 1.3;
    }
    if (obj.demo_only) return box;  // bounded objective; record the bound and proceed
    throw computation_error("choose_box: boundary decay criterion not met within growth budget");
}

struct RefinedEvaluation {
    GridEvaluator evaluator;
    std::vector<double> log_integrals;      // per anchor (heat) or single Gibbs integral
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
};

// Node-doubling refinement until the log-integrals (and, when requested, the
// first two moments) at every anchor are stable between successive levels.
RefinedEvaluation refine(const ObjectiveSpec& obj, const ControlParams& params, bool heat, double t,
                         const std::vector<Eigen::VectorXd>& xs, double tol, bool with_moments) {
    if (obj.dim > 3) throw validation_error("quadrature oracle limited to dim <= 3");
    if (heat && !(t < params.horizon_T)) throw validation_error("oracle: t must be < T");
    const BoxSpec box = choose_box(obj, params, heat, t, xs, tol);
    const int cap = max_panels_for_dim(obj.dim);
    const std::size_t n_eval = heat ? xs.size() : 1;

    std::optional<RefinedEvaluation> prev;
    for (int panels = kMinPanels; panels <= cap; panels *= 2) {
        QuadratureGrid grid = make_uniform_grid(box.center, box.radius, panels);
        grid.neglected_mass_bound = box.neglected_mass_bound;
        RefinedEvaluation cur{GridEvaluator(obj, params, std::move(grid)), {}, {}, {}};
        cur.log_integrals.resize(n_eval);
        if (with_moments) {
            cur.means.resize(n_eval);
            cur.covs.resize(n_eval);
        }
        for (std::size_t k = 0; k < n_eval; ++k) {
            if (heat) {
                if (with_moments) {
                    DriftEvaluation ev = cur.evaluator.evaluate(t, xs[k], 0.0);
                    cur.log_integrals[k] = ev.log_h;  // log_M = 0: this is L(t,x)
                    cur.means[k] = ev.barycenter_a;
                    cur.covs[k] = ev.covariance;
                } else {
                    cur.log_integrals[k] = cur.evaluator.log_heat_gibbs(t, xs[k]);
                }
            } else {
                cur.log_integrals[k] = cur.evaluator.log_gibbs_integral();
                if (with_moments) cur.evaluator.gibbs_moments(cur.means[k], cur.covs[k]);
            }
        }
        if (prev) {
            bool ok = true;
            for (std::size_t k = 0; k < n_eval && ok; ++k) {
                ok = std::abs(cur.log_integrals[k] - prev->log_integrals[k]) <= tol;
                if (ok && with_moments) {
                    ok = (cur.means[k] - prev->means[k]).lpNorm<Eigen::Infinity>() <=
                             tol * (1.0 + cur.means[k].lpNorm<Eigen::Infinity>()) &&
                         (cur.covs[k] - prev->covs[k]).lpNorm<Eigen::Infinity>() <=
                             tol * (1.0 + cur.covs[k].lpNorm<Eigen::Infinity>());
                }
            }
            if (ok) return cur;
        }
        prev = std::move(cur);
    }
    throw computation_error("quadrature refinement did not converge within the node budget");
}

RefinedEvaluation refine_single(const ObjectiveSpec& obj, const ControlParams& params, bool heat,
                                double t, const Eigen::VectorXd* x, double tol, bool with_moments) {
    std::vector<Eigen::VectorXd> xs;
    if (x != nullptr) xs.push_back(*x);
    return refine(obj, params, heat, t, xs, tol, with_moments);
}

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& m) {
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

// ---------------------------------------------------------------------------
// GridEvaluator

GridEvaluator::GridEvaluator(const ObjectiveSpec& obj, const ControlParams& params,
                             QuadratureGrid grid)
    : obj_(&obj), params_(params), grid_(std::move(grid)) {
    const std::int64_t n = grid_.node_count();
    gibbs_log_weight_.resize(static_cast<std::size_t>(n));
    const double a = params_.alpha();
    const int d = grid_.dim;
#pragma omp parallel
    {
        Eigen::VectorXd y(d);
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) {
            grid_.point_at(i, y);
            gibbs_log_weight_[static_cast<std::size_t>(i)] =
                -a * obj_->value(y) + grid_.log_quad_weight_at(i);
        }
    }
}

double GridEvaluator::log_heat_gibbs(double t, const Eigen::VectorXd& x) const {
    if (!(t < params_.horizon_T)) throw validation_error("log_heat_gibbs: t must be < T");
    const std::int64_t n = grid_.node_count();
    const int d = grid_.dim;
    const double tau = params_.horizon_T - t;
    const double inv4bt = 1.0 / (4.0 * params_.diffusivity_beta * tau);
    const double log_pref = -0.5 * d * std::log(4.0 * M_PI * params_.diffusivity_beta * tau);
    const auto lw = [&](std::int64_t i) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        grid_.point_at(i, y);
        return gibbs_log_weight_[static_cast<std::size_t>(i)] - (y - x).squaredNorm() * inv4bt;
    };
    const double m = kernels::max_reduce(n, lw);
    if (!std::isfinite(m)) return m;
    const double s = kernels::sum_reduce(n, [&](std::int64_t i) { return std::exp(lw(i) - m); });
    return log_pref + m + std::log(s);
}

DriftEvaluation GridEvaluator::evaluate(double t, const Eigen::VectorXd& x, double log_M) const {
    if (!(t < params_.horizon_T)) throw validation_error("evaluate: t must be < T");
    const std::int64_t n = grid_.node_count();
    const int d = grid_.dim;
    const double tau = params_.horizon_T - t;
    const double inv4bt = 1.0 / (4.0 * params_.diffusivity_beta * tau);
    const double log_pref = -0.5 * d * std::log(4.0 * M_PI * params_.diffusivity_beta * tau);
    const auto lw = [&](std::int64_t i, Eigen::VectorXd& y) {
        grid_.point_at(i, y);
        return gibbs_log_weight_[static_cast<std::size_t>(i)] - (y - x).squaredNorm() * inv4bt;
    };
    const double m = kernels::max_reduce(n, [&](std::int64_t i) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        return lw(i, y);
    });
    if (!std::isfinite(m)) throw computation_error("evaluate: integrand is identically zero");

    // pass 1: normalization and first moment (centered at x)
    std::vector<double> acc1(static_cast<std::size_t>(1 + d));
    kernels::accumulate(n, 1 + d, [&](std::int64_t i, double* acc) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        const double w = std::exp(lw(i, y) - m);
        acc[0] += w;
        for (int k = 0; k < d; ++k) acc[1 + k] += w * (y[k] - x[k]);
    }, acc1.data());
    const double sum_w = acc1[0];
    Eigen::VectorXd a_bar(d);
    for (int k = 0; k < d; ++k) a_bar[k] = x[k] + acc1[1 + k] / sum_w;

    // pass 2: central second moments
    const int mtri = d * (d + 1) / 2;
    std::vector<double> acc2(static_cast<std::size_t>(mtri));
    kernels::accumulate(n, mtri, [&](std::int64_t i, double* acc) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        const double w = std::exp(lw(i, y) - m);
        int c = 0;
        for (int r = 0; r < d; ++r)
            for (int s = r; s < d; ++s) acc[c++] += w * (y[r] - a_bar[r]) * (y[s] - a_bar[s]);
    }, acc2.data());
    Eigen::MatrixXd cov(d, d);
    int c = 0;
    for (int r = 0; r < d; ++r)
        for (int s = r; s < d; ++s) {
            cov(r, s) = acc2[c] / sum_w;
            cov(s, r) = cov(r, s);
            ++c;
        }

    DriftEvaluation ev;
    ev.t = t;
    ev.x = x;
    const double L = log_pref + m + std::log(sum_w);
    ev.value_V = -L / params_.alpha();
    ev.log_h = L - log_M;
    ev.phi = -2.0 * params_.diffusivity_beta * ev.log_h;
    ev.barycenter_a = a_bar;
    ev.drift_u = -(x - a_bar) / tau;
    ev.covariance = clamp_psd(cov);
    return ev;
}

Eigen::VectorXd GridEvaluator::averaged_gradient(double t, const Eigen::VectorXd& x) const {
    const std::int64_t n = grid_.node_count();
    const int d = grid_.dim;
    const double tau = params_.horizon_T - t;
    const double inv4bt = 1.0 / (4.0 * params_.diffusivity_beta * tau);
    const auto lw = [&](std::int64_t i, Eigen::VectorXd& y) {
        grid_.point_at(i, y);
        return gibbs_log_weight_[static_cast<std::size_t>(i)] - (y - x).squaredNorm() * inv4bt;
    };
    const double m = kernels::max_reduce(n, [&](std::int64_t i) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        return lw(i, y);
    });
    std::vector<double> acc(static_cast<std::size_t>(1 + d));
    kernels::accumulate(n, 1 + d, [&](std::int64_t i, double* a) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        const double w = std::exp(lw(i, y) - m);
        a[0] += w;
        const Eigen::VectorXd g = obj_->gradient(y);
        for (int k = 0; k < d; ++k) a[1 + k] += w * g[k];
    }, acc.data());
    Eigen::VectorXd out(d);
    for (int k = 0; k < d; ++k) out[k] = acc[1 + k] / acc[0];
    return out;
}

double GridEvaluator::tail_mass(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& center,
                                double radius) const {
    const std::int64_t n = grid_.node_count();
    const int d = grid_.dim;
    const double tau = params_.horizon_T - t;
    const double inv4bt = 1.0 / (4.0 * params_.diffusivity_beta * tau);
    const double r2 = radius * radius;
    const auto lw = [&](std::int64_t i, Eigen::VectorXd& y) {
        grid_.point_at(i, y);
        return gibbs_log_weight_[static_cast<std::size_t>(i)] - (y - x).squaredNorm() * inv4bt;
    };
    const double m = kernels::max_reduce(n, [&](std::int64_t i) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        return lw(i, y);
    });
    double acc[2];
    kernels::accumulate(n, 2, [&](std::int64_t i, double* a) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        const double w = std::exp(lw(i, y) - m);
        a[0] += w;
        if ((y - center).squaredNorm() >= r2) a[1] += w;
    }, acc);
    return acc[1] / acc[0];
}

double GridEvaluator::log_gibbs_integral() const {
    const std::int64_t n = grid_.node_count();
    const auto lw = [&](std::int64_t i) { return gibbs_log_weight_[static_cast<std::size_t>(i)]; };
    const double m = kernels::max_reduce(n, lw);
    if (!std::isfinite(m)) return m;
    const double s = kernels::sum_reduce(n, [&](std::int64_t i) { return std::exp(lw(i) - m); });
    return m + std::log(s);
}

void GridEvaluator::gibbs_moments(Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
    const std::int64_t n = grid_.node_count();
    const int d = grid_.dim;
    const auto lw = [&](std::int64_t i) { return gibbs_log_weight_[static_cast<std::size_t>(i)]; };
    const double m = kernels::max_reduce(n, lw);
    const Eigen::VectorXd ref = grid_.truncation_center;
    std::vector<double> acc1(static_cast<std::size_t>(1 + d));
    kernels::accumulate(n, 1 + d, [&](std::int64_t i, double* a) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        grid_.point_at(i, y);
        const double w = std::exp(lw(i) - m);
        a[0] += w;
        for (int k = 0; k < d; ++k) a[1 + k] += w * (y[k] - ref[k]);
    }, acc1.data());
    mean.resize(d);
    for (int k = 0; k < d; ++k) mean[k] = ref[k] + acc1[1 + k] / acc1[0];

    const int mtri = d * (d + 1) / 2;
    std::vector<double> acc2(static_cast<std::size_t>(mtri));
    kernels::accumulate(n, mtri, [&](std::int64_t i, double* a) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        grid_.point_at(i, y);
        const double w = std::exp(lw(i) - m);
        int c = 0;
        for (int r = 0; r < d; ++r)
            for (int s = r; s < d; ++s) a[c++] += w * (y[r] - mean[r]) * (y[s] - mean[s]);
    }, acc2.data());
    cov.resize(d, d);
    int c = 0;
    for (int r = 0; r < d; ++r)
        for (int s = r; s < d; ++s) {
            cov(r, s) = acc2[c] / acc1[0];
            cov(s, r) = cov(r, s);
            ++c;
        }
}

double GridEvaluator::gibbs_ball_mass(const Eigen::VectorXd& center, double radius) const {
    const std::int64_t n = grid_.node_count();
    const int d = grid_.dim;
    const double r2 = radius * radius;
    const auto lw = [&](std::int64_t i) { return gibbs_log_weight_[static_cast<std::size_t>(i)]; };
    const double m = kernels::max_reduce(n, lw);
    double acc[2];
    kernels::accumulate(n, 2, [&](std::int64_t i, double* a) {
        thread_local Eigen::VectorXd y;
        y.resize(d);
        grid_.point_at(i, y);
        const double w = std::exp(lw(i) - m);
        a[0] += w;
        if ((y - center).squaredNorm() <= r2) a[1] += w;
    }, acc);
    return acc[1] / acc[0];
}

// ---------------------------------------------------------------------------
// adaptive entry points

QuadratureGrid build_grid(const ObjectiveSpec& obj, const ControlParams& params, double t,
                          const Eigen::VectorXd& x, double tol) {
    return refine_single(obj, params, /*heat=*/true, t, &x, tol, /*with_moments=*/false)
        .evaluator.grid();
}

GridEvaluator make_shared_evaluator(const ObjectiveSpec& obj, const ControlParams& params, double t,
                                    const std::vector<Eigen::VectorXd>& anchors, double tol) {
    return refine(obj, params, /*heat=*/true, t, anchors, tol, /*with_moments=*/true).evaluator;
}

DriftEvaluation evaluate_point(const ObjectiveSpec& obj, const ControlParams& params, double t,
                               const Eigen::VectorXd& x, double tol, double log_M) {
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/true, t, &x, tol, /*with_moments=*/true);
    return r.evaluator.evaluate(t, x, log_M);
}

DriftEvaluation evaluate_point(const ObjectiveSpec& obj, const ControlParams& params, double t,
                               const Eigen::VectorXd& x, double tol) {
    return evaluate_point(obj, params, t, x, tol, partition_free_energy(obj, params, tol).log_M);
}

DriftEvaluation gaussian_closed_form(const Eigen::MatrixXd& A, const ControlParams& params,
                                     double t, const Eigen::VectorXd& x) {
    const int d = static_cast<int>(A.rows());
    if (A.rows() != A.cols() || !A.isApprox(A.transpose(), 1e-12))
        throw validation_error("gaussian_closed_form: A must be symmetric");
    if (!(t < params.horizon_T)) throw validation_error("gaussian_closed_form: t must be < T");
    Eigen::LLT<Eigen::MatrixXd> llt_A(A);
    if (llt_A.info() != Eigen::Success)
        throw validation_error("gaussian_closed_form: A must be positive definite");

    const double tau = params.horizon_T - t;
    const double a = params.alpha();
    const double c = params.cost_lambda / (params.horizon_T * tau);
    const double s = params.heat_variance(t);  // 2 beta (T-t)

    // eta is Gaussian with precision alpha (A + c I); complete the square.
    Eigen::MatrixXd P = A + c * Eigen::MatrixXd::Identity(d, d);
    Eigen::LLT<Eigen::MatrixXd> llt_P(P);
    Eigen::VectorXd mean = llt_P.solve(c * x);
    Eigen::MatrixXd cov = llt_P.solve(Eigen::MatrixXd::Identity(d, d)) / a;

    // integral of G_{T-t}(x-.) exp(-alpha f): Gaussian expectation of a
    // quadratic exponential, E[exp(-alpha/2 Y^T A Y)] with Y ~ N(x, s I).
    Eigen::MatrixXd B = Eigen::MatrixXd::Identity(d, d) + (s * a) * A;
    Eigen::LLT<Eigen::MatrixXd> llt_B(B);
    double logdet_B = 0.0;
    for (int i = 0; i < d; ++i) logdet_B += 2.0 * std::log(llt_B.matrixL()(i, i));
    const double V = 0.5 / a * logdet_B + 0.5 * x.dot(A * llt_B.solve(x));

    double logdet_A = 0.0;
    for (int i = 0; i < d; ++i) logdet_A += 2.0 * std::log(llt_A.matrixL()(i, i));
    const double log_M = 0.5 * d * std::log(2.0 * M_PI / a) - 0.5 * logdet_A;

    DriftEvaluation ev;
    ev.t = t;
    ev.x = x;
    ev.value_V = V;
    ev.log_h = -a * V - log_M;
    ev.phi = -2.0 * params.diffusivity_beta * ev.log_h;
    ev.barycenter_a = mean;
    ev.drift_u = -(x - mean) / tau;
    ev.covariance = cov;
    return ev;
}

DriftEvaluation evaluate_auto(const ObjectiveSpec& obj, const ControlParams& params, double t,
                              const Eigen::VectorXd& x, double tol) {
    if (obj.quadratic_form) return gaussian_closed_form(*obj.quadratic_form, params, t, x);
    return evaluate_point(obj, params, t, x, tol);
}

Eigen::VectorXd oracle_drift(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, double tol) {
    if (obj.quadratic_form && obj.dim == 1) {
        // scalar closed form, allocation-free for the integrator hot loop
        const double tau = params.horizon_T - t;
        const double c = params.cost_lambda / (params.horizon_T * tau);
        const double A = (*obj.quadratic_form)(0, 0);
        Eigen::VectorXd u(1);
        u[0] = -(x[0] - c * x[0] / (A + c)) / tau;
        return u;
    }
    if (obj.quadratic_form) return gaussian_closed_form(*obj.quadratic_form, params, t, x).drift_u;
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/true, t, &x, tol, /*with_moments=*/true);
    return -(x - r.means[0]) / (params.horizon_T - t);
}

ThreeDrifts drift_three_ways(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, double tol) {
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/true, t, &x, tol, /*with_moments=*/true);
    const GridEvaluator& ge = r.evaluator;
    ThreeDrifts out;
    out.u_barycentric = -(x - r.means[0]) / (params.horizon_T - t);
    out.u_avg_gradient = -(params.horizon_T / params.cost_lambda) * ge.averaged_gradient(t, x);
    out.u_potential = drift_potential_fd(ge, t, x);
    return out;
}

double eta_log_density(const ObjectiveSpec& obj, const ControlParams& params, double t,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& y, double tol) {
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/true, t, &x, tol, /*with_moments=*/false);
    return log_heat_kernel(params.horizon_T - t, x - y, params.diffusivity_beta) -
           params.alpha() * obj.value(y) - r.log_integrals[0];
}

double transition_log_kernel(const ObjectiveSpec& obj, const ControlParams& params, double t,
                             const Eigen::VectorXd& x, double s, const Eigen::VectorXd& y,
                             double tol) {
    if (!(0.0 <= t && t < s && s <= params.horizon_T))
        throw validation_error("transition_log_kernel: need 0 <= t < s <= T");
    RefinedEvaluation rt = refine_single(obj, params, /*heat=*/true, t, &x, tol, /*with_moments=*/false);
    double numerator;
    if (s == params.horizon_T) {
        numerator = -params.alpha() * obj.value(y);  // h(T, .) is the unnormalized Gibbs factor
    } else {
        RefinedEvaluation rs =
            refine_single(obj, params, /*heat=*/true, s, &y, tol, /*with_moments=*/false);
        numerator = rs.log_integrals[0];
    }
    return log_heat_kernel(s - t, y - x, params.diffusivity_beta) + numerator - rt.log_integrals[0];
}

PartitionResult partition_free_energy(const ObjectiveSpec& obj, const ControlParams& params,
                                      double tol) {
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/false, 0.0, nullptr, tol, false);
    PartitionResult out;
    out.log_M = r.log_integrals[0];
    out.free_energy = -out.log_M / params.alpha();
    return out;
}

GibbsMoments gibbs_moments(const ObjectiveSpec& obj, const ControlParams& params, double tol) {
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/false, 0.0, nullptr, tol, true);
    GibbsMoments out;
    out.log_M = r.log_integrals[0];
    out.mean = r.means[0];
    out.cov = r.covs[0];
    return out;
}

double gibbs_ball_mass(const ObjectiveSpec& obj, const ControlParams& params,
                       const Eigen::VectorXd& center, double radius, double tol) {
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/false, 0.0, nullptr, tol, false);
    return r.evaluator.gibbs_ball_mass(center, radius);
}

double GibbsCdf::operator()(double v) const {
    if (v <= x.front()) return 0.0;
    if (v >= x.back()) return 1.0;
    const auto it = std::upper_bound(x.begin(), x.end(), v);
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    const double t = (v - x[j - 1]) / (x[j] - x[j - 1]);
    return F[j - 1] + t * (F[j] - F[j - 1]);
}

GibbsCdf gibbs_cdf_1d(const ObjectiveSpec& obj, const ControlParams& params, double tol) {
    if (obj.dim != 1) throw validation_error("gibbs_cdf_1d: dim must be 1");
    RefinedEvaluation r = refine_single(obj, params, /*heat=*/false, 0.0, nullptr, tol, false);
    // the integral converges on coarse grids; the pointwise interpolated CDF
    // needs a much finer tabulation
    const QuadratureGrid fine = make_uniform_grid(r.evaluator.grid().truncation_center,
                                                  r.evaluator.grid().truncation_radius, 8192);
    const auto& nodes = fine.nodes[0];
    const double a = params.alpha();
    GibbsCdf cdf;
    cdf.x = nodes;
    cdf.F.resize(nodes.size(), 0.0);
    // trapezoid cumulative of the density, max-shifted
    std::vector<double> logp(nodes.size());
    Eigen::VectorXd y(1);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        y[0] = nodes[i];
        logp[i] = -a * obj.value(y);
        m = std::max(m, logp[i]);
    }
    double acc = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        acc += 0.5 * (std::exp(logp[i - 1] - m) + std::exp(logp[i] - m)) * (nodes[i] - nodes[i - 1]);
        cdf.F[i] = acc;
    }
    for (auto& f : cdf.F) f /= acc;
    return cdf;
}

MoreauResult moreau_prox(const ObjectiveSpec& obj, const ControlParams& params,
                         const Eigen::VectorXd& x0, double tol) {
    if (obj.dim > 3) throw validation_error("moreau_prox: dim must be <= 3");
    const int d = obj.dim;
    const double w = params.cost_lambda / (params.horizon_T * params.horizon_T);
    const auto g = [&](const Eigen::VectorXd& y) {
        return obj.value(y) + 0.5 * w * (y - x0).squaredNorm();
    };

    // box covering x0 and x*, scanned coarsely
    Eigen::VectorXd lo = x0, hi = x0;
    if (obj.known_minimizer) {
        lo = lo.cwiseMin(*obj.known_minimizer);
        hi = hi.cwiseMax(*obj.known_minimizer);
    }
    const Eigen::VectorXd center = 0.5 * (lo + hi);
    const double radius =
        (hi - lo).lpNorm<Eigen::Infinity>() * 0.5 + std::max(obj.coercivity_radius_hint, 3.0);
    const int panels = 64;
    QuadratureGrid grid = make_uniform_grid(center, radius, panels);
    std::int64_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd y(d);
    const std::int64_t n = grid.node_count();
    for (std::int64_t i = 0; i < n; ++i) {  // first strict improvement keeps the smallest index on ties
        grid.point_at(i, y);
        const double v = g(y);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    Eigen::VectorXd seed(d);
    grid.point_at(best, seed);

    MoreauResult out;
    Eigen::VectorXd cur = seed;
    double cur_val = best_val;
    bool converged = false;
    for (int it = 0; it < 80; ++it) {
        Eigen::VectorXd grad = obj.gradient(cur) + w * (cur - x0);
        if (grad.lpNorm<Eigen::Infinity>() <= std::min(tol, 1e-12) * (1.0 + std::abs(cur_val))) {
            converged = true;
            break;
        }
        Eigen::MatrixXd H = obj.hessian(cur) + w * Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd step = H.ldlt().solve(grad);
        if (!step.allFinite()) break;
        // damped update: halve until the envelope value does not increase
        double scale = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k) {
            Eigen::VectorXd trial = cur - scale * step;
            const double tv = g(trial);
            if (tv <= cur_val + 1e-15 * (1.0 + std::abs(cur_val))) {
                cur = trial;
                cur_val = tv;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;
    }
    if (converged && cur_val <= best_val + 1e-12 * (1.0 + std::abs(best_val))) {
        out.y_opt = cur;
        out.envelope_value = g(cur);
        out.newton_converged = true;
    } else {
        out.y_opt = seed;  // fall back to the finest grid point
        out.envelope_value = best_val;
        out.newton_converged = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// finite-difference probes

Eigen::VectorXd drift_potential_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x) {
    // u = -grad Phi = 2 beta grad log h; the partition constant drops out.
    const int d = static_cast<int>(x.size());
    const double h = fd_step(x);
    const double two_beta = 2.0 * ge.params().diffusivity_beta;
    Eigen::VectorXd u(d);
    Eigen::VectorXd xp = x, xm = x;
    for (int i = 0; i < d; ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        u[i] = two_beta * (ge.log_heat_gibbs(t, xp) - ge.log_heat_gibbs(t, xm)) / (2.0 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return u;
}

Eigen::MatrixXd phi_hessian_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    const double h = fd_step(x);
    const double minus_two_beta = -2.0 * ge.params().diffusivity_beta;
    const double L0 = ge.log_heat_gibbs(t, x);
    Eigen::MatrixXd H(d, d);
    Eigen::VectorXd p = x;
    for (int i = 0; i < d; ++i) {
        p[i] = x[i] + h;
        const double Lp = ge.log_heat_gibbs(t, p);
        p[i] = x[i] - h;
        const double Lm = ge.log_heat_gibbs(t, p);
        p[i] = x[i];
        H(i, i) = minus_two_beta * (Lp - 2.0 * L0 + Lm) / (h * h);
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            double v = 0.0;
            for (int si : {1, -1})
                for (int sj : {1, -1}) {
                    p = x;
                    p[i] += si * h;
                    p[j] += sj * h;
                    v += si * sj * ge.log_heat_gibbs(t, p);
                }
            H(i, j) = minus_two_beta * v / (4.0 * h * h);
            H(j, i) = H(i, j);
        }
    return H;
}

double phi_laplacian_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    const double h = fd_step(x);
    const double minus_two_beta = -2.0 * ge.params().diffusivity_beta;
    const double L0 = ge.log_heat_gibbs(t, x);
    double lap = 0.0;
    Eigen::VectorXd p = x;
    for (int i = 0; i < d; ++i) {
        p[i] = x[i] + h;
        const double Lp = ge.log_heat_gibbs(t, p);
        p[i] = x[i] - h;
        const double Lm = ge.log_heat_gibbs(t, p);
        p[i] = x[i];
        lap += minus_two_beta * (Lp - 2.0 * L0 + Lm) / (h * h);
    }
    return lap;
}

Eigen::MatrixXd barycenter_jacobian_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    const double h = fd_step(x);
    Eigen::MatrixXd J(d, d);
    Eigen::VectorXd p = x;
    for (int j = 0; j < d; ++j) {
        p[j] = x[j] + h;
        const Eigen::VectorXd ap = ge.evaluate(t, p, 0.0).barycenter_a;
        p[j] = x[j] - h;
        const Eigen::VectorXd am = ge.evaluate(t, p, 0.0).barycenter_a;
        p[j] = x[j];
        J.col(j) = (ap - am) / (2.0 * h);
    }
    return J;
}

ValueDerivatives value_derivatives_fd(const GridEvaluator& ge, double t, const Eigen::VectorXd& x) {
    const int d = static_cast<int>(x.size());
    const double a = ge.params().alpha();
    const auto V = [&](double tt, const Eigen::VectorXd& p) { return -ge.log_heat_gibbs(tt, p) / a; };
    ValueDerivatives out;
    const double ht = 1e-4;
    out.dt = (V(t + ht, x) - V(t - ht, x)) / (2.0 * ht);
    const double h = fd_step(x);
    out.grad.resize(d);
    const double V0 = V(t, x);
    out.laplacian = 0.0;
    Eigen::VectorXd p = x;
    for (int i = 0; i < d; ++i) {
        p[i] = x[i] + h;
        const double Vp = V(t, p);
        p[i] = x[i] - h;
        const double Vm = V(t, p);
        p[i] = x[i];
        out.grad[i] = (Vp - Vm) / (2.0 * h);
        out.laplacian += (Vp - 2.0 * V0 + Vm) / (h * h);
    }
    return out;
}

}  // namespace gibbsdrift::oracle
