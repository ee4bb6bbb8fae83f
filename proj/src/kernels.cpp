#include "nvcvar/kernels.hpp"

#include <algorithm>

namespace nvcvar::kernels {

namespace {
double pairwise_sum_range(const double* v, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n <= kPairwiseBase) {
        double acc = 0.0;
        for (std::size_t i = lo; i < hi; ++i) acc += v[i];
        return acc;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum_range(v, lo, mid) + pairwise_sum_range(v, mid, hi);
}
} // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.empty()) return 0.0;
    return pairwise_sum_range(values.data(), 0, values.size());
}

double sum_serial(std::span<const double> values) {
    double acc = 0.0;
    for (double x : values) acc += x;
    return acc;
}

double hinge_excess_sum(std::span<const double> losses, double alpha) {
    return deterministic_map_sum(losses.size(), [&](std::size_t i) {
        return std::max(losses[i] - alpha, 0.0);
    });
}

double hinge_excess_sum_serial(std::span<const double> losses, double alpha) {
    double acc = 0.0;
    for (double l : losses) acc += std::max(l - alpha, 0.0);
    return acc;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

} // namespace nvcvar::kernels
