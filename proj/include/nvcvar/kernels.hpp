#pragma once

#include <cstddef>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nvcvar::kernels {

// Reductions come in two flavours throughout this project:
//  * the OpenMP kernel, which fills a term buffer in parallel and reduces it
//    with a fixed pairwise tree, so the result is bit-identical for any
//    thread count;
//  * a plain serial reference (left fold), kept for tests and the benchmark
//    target.
// The pairwise tree shape depends only on n, never on the thread count.

inline constexpr std::size_t kPairwiseBase = 64;
inline constexpr std::size_t kParallelThreshold = 1 << 15;

double pairwise_sum(std::span<const double> values);
double sum_serial(std::span<const double> values);

namespace detail {
template <class F>
double pairwise_map_sum_range(std::size_t lo, std::size_t hi, F&& f) {
    const std::size_t n = hi - lo;
    if (n <= kPairwiseBase) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += f(i);
        return acc;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_map_sum_range(lo, mid, f) + pairwise_map_sum_range(mid, hi, f);
}
} // namespace detail

/// Deterministic sum of f(0..n-1). Above kParallelThreshold the terms are
/// materialized with an OpenMP fill; the reduction tree is identical either
/// way, so results do not depend on the execution strategy.
template <class F>
double deterministic_map_sum(std::size_t n, F&& f) {
    if (n == 0) return 0.0;
#ifdef _OPENMP
    if (n >= kParallelThreshold && omp_get_max_threads() > 1 && !omp_in_parallel()) {
        std::vector<double> terms(n);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            terms[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
        return pairwise_sum(terms);
    }
#endif
    return detail::pairwise_map_sum_range(0, n, f);
}

/// Serial reference: straight left-to-right accumulation.
template <class F>
double map_sum_serial(std::size_t n, F&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += f(i);
    return acc;
}

/// sum_i max(losses[i] - alpha, 0), the hinge reduction at the heart of every
/// risk objective here.
double hinge_excess_sum(std::span<const double> losses, double alpha);
double hinge_excess_sum_serial(std::span<const double> losses, double alpha);

int max_threads();
void set_threads(int n);

/// Parallel loop over independent work items (each item writes only its own
/// slot). Falls back to serial inside existing parallel regions.
template <class F>
void parallel_for(long long n, F&& f, bool parallel = true) {
#ifdef _OPENMP
    if (parallel && n > 1 && omp_get_max_threads() > 1 && !omp_in_parallel()) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < n; ++i) f(i);
        return;
    }
#endif
    for (long long i = 0; i < n; ++i) f(i);
}

} // namespace nvcvar::kernels
