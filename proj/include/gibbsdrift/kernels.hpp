#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gibbsdrift::kernels {

// Reduction kernels shared by the quadrature oracle, the Monte-Carlo
// estimators, and the trajectory ensembles.
//
// The parallel versions accumulate per fixed-size block and combine block
// partials in index order, so the result is bit-identical for any thread
// count (including 1). The *_serial functions are the plain reference loops
// kept for testing and for the benchmark target; they agree with the blocked
// versions to rounding, not bitwise.

inline constexpr std::int64_t block_size = 8192;

template <class F>
double max_reduce_serial(std::int64_t n, F&& f) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < n; ++i) {
        const double v = f(i);
        if (v > m) m = v;
    }
    return m;
}

// Max is exact under any evaluation order, so a plain omp reduction is safe.
template <class F>
double max_reduce(std::int64_t n, F&& f) {
    double m = -std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(max : m)
    for (std::int64_t i = 0; i < n; ++i) {
        const double v = f(i);
        if (v > m) m = v;
    }
    return m;
}

// out[0..m) += sum over i of the contributions written by f(i, acc).
// f must *add* into acc.
template <class F>
void accumulate_serial(std::int64_t n, int m, F&& f, double* out) {
    for (int c = 0; c < m; ++c) out[c] = 0.0;
    for (std::int64_t i = 0; i < n; ++i) f(i, out);
}

template <class F>
void accumulate(std::int64_t n, int m, F&& f, double* out) {
    const std::int64_t nblocks = (n + block_size - 1) / block_size;
    std::vector<double> partial(static_cast<std::size_t>(nblocks) * m, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nblocks; ++b) {
        double* acc = partial.data() + static_cast<std::size_t>(b) * m;
        const std::int64_t lo = b * block_size;
        const std::int64_t hi = std::min(n, lo + block_size);
        for (std::int64_t i = lo; i < hi; ++i) f(i, acc);
    }
    for (int c = 0; c < m; ++c) out[c] = 0.0;
    for (std::int64_t b = 0; b < nblocks; ++b)
        for (int c = 0; c < m; ++c) out[c] += partial[static_cast<std::size_t>(b) * m + c];
}

template <class F>
double sum_reduce(std::int64_t n, F&& f) {
    double out = 0.0;
    accumulate(n, 1, [&f](std::int64_t i, double* acc) { acc[0] += f(i); }, &out);
    return out;
}

template <class F>
double sum_reduce_serial(std::int64_t n, F&& f) {
    double out = 0.0;
    accumulate_serial(n, 1, [&f](std::int64_t i, double* acc) { acc[0] += f(i); }, &out);
    return out;
}

inline int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace gibbsdrift::kernels
