// Timing comparison between the OpenMP reduction kernels and the serial
// reference loops, on the three hot paths: tensor-grid moments, Monte-Carlo
// weight sums, and an Euler-Maruyama ensemble.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "gibbsdrift/integrator.hpp"
#include "gibbsdrift/kernels.hpp"
#include "gibbsdrift/objectives.hpp"
#include "gibbsdrift/oracle.hpp"
#include "gibbsdrift/quadrature.hpp"
#include "gibbsdrift/rng.hpp"

using namespace gibbsdrift;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <class F>
double time_ms(F&& f, int reps = 3) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        f();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

volatile double sink;

void bench_grid_moments(int panels) {
    const ObjectiveSpec obj = builtin_objective("shifted_double_well", 2);
    const ControlParams params(1.0, 0.5, 0.5);
    const QuadratureGrid grid = make_uniform_grid(Eigen::VectorXd::Zero(2), 4.0, panels);
    const std::int64_t n = grid.node_count();
    const double a = params.alpha();

    const auto lw = [&](std::int64_t i) {
        thread_local Eigen::VectorXd y;
        y.resize(2);
        grid.point_at(i, y);
        return -a * (std::pow(y[0] * y[0] - 1.0, 2) + 0.3 * y[0] +
                     std::pow(y[1] * y[1] - 1.0, 2) + 0.3 * y[1]) +
               grid.log_quad_weight_at(i);
    };

    const double m = kernels::max_reduce(n, lw);
    const double t_par = time_ms([&] {
        double acc[3];
        kernels::accumulate(n, 3, [&](std::int64_t i, double* out) {
            thread_local Eigen::VectorXd y;
            y.resize(2);
            grid.point_at(i, y);
            const double w = std::exp(lw(i) - m);
            out[0] += w;
            out[1] += w * y[0];
            out[2] += w * y[1];
        }, acc);
        sink = acc[0];
    });
    const double t_ser = time_ms([&] {
        double acc[3];
        kernels::accumulate_serial(n, 3, [&](std::int64_t i, double* out) {
            thread_local Eigen::VectorXd y;
            y.resize(2);
            grid.point_at(i, y);
            const double w = std::exp(lw(i) - m);
            out[0] += w;
            out[1] += w * y[0];
            out[2] += w * y[1];
        }, acc);
        sink = acc[0];
    });
    std::printf("grid moments %5d^2 nodes  serial %8.2f ms   omp %8.2f ms   speedup %5.2fx\n",
                panels + 1, t_ser, t_par, t_ser / t_par);
}

void bench_mc_weights(std::int64_t n) {
    const ObjectiveSpec obj = builtin_objective("shifted_double_well", 2);
    std::vector<double> pts(static_cast<std::size_t>(n) * 2);
    RngStream rng(7);
    for (auto& v : pts) v = 2.0 * rng.normal();
    const double a = 2.0;
    const auto lw = [&](std::int64_t i) {
        const double* p = pts.data() + 2 * static_cast<std::size_t>(i);
        return -a * (std::pow(p[0] * p[0] - 1.0, 2) + 0.3 * p[0] +
                     std::pow(p[1] * p[1] - 1.0, 2) + 0.3 * p[1]);
    };
    const double m = kernels::max_reduce(n, lw);
    const double t_par =
        time_ms([&] { sink = kernels::sum_reduce(n, [&](std::int64_t i) { return std::exp(lw(i) - m); }); });
    const double t_ser = time_ms(
        [&] { sink = kernels::sum_reduce_serial(n, [&](std::int64_t i) { return std::exp(lw(i) - m); }); });
    std::printf("mc weight sum %9lld pts  serial %8.2f ms   omp %8.2f ms   speedup %5.2fx\n",
                static_cast<long long>(n), t_ser, t_par, t_ser / t_par);
}

void bench_ensemble(int n_traj) {
    const ObjectiveSpec obj = builtin_objective("shifted_double_well", 2);
    const ControlParams params(1.0, 0.5, 0.1);
    integrator::DriftProvider provider;
    provider.kind = integrator::DriftKind::langevin_baseline;
    integrator::EnsembleInit init;
    init.kind = integrator::EnsembleInit::Kind::point;
    init.x0 = Eigen::VectorXd::Ones(2);

    const double t_par = time_ms(
        [&] {
            const auto res =
                integrator::em_ensemble(obj, params, provider, init, 1e-3, n_traj, 42, 0.3, false);
            sink = res.summary.mean_f_terminal;
        },
        2);
    // serial reference: one trajectory at a time through em_run
    const double t_ser = time_ms(
        [&] {
            double acc = 0.0;
            for (int i = 0; i < n_traj; ++i)
                acc += integrator::em_run(obj, params, provider, init.x0, 1e-3, 42, i, false)
                           .f_terminal;
            sink = acc / n_traj;
        },
        2);
    std::printf("em ensemble %6d trajs     serial %8.2f ms   omp %8.2f ms   speedup %5.2fx\n",
                n_traj, t_ser, t_par, t_ser / t_par);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", kernels::thread_count());
    bench_grid_moments(256);
    bench_grid_moments(512);
    bench_grid_moments(1024);
    bench_mc_weights(1000000);
    bench_mc_weights(4000000);
    bench_ensemble(200);
    bench_ensemble(800);
    return 0;
}
