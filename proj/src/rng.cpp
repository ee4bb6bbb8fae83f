#include "nvcvar/rng.hpp"
#include "nvcvar/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace nvcvar::rng {

std::uint64_t stream_id(std::string_view label, std::uint64_t a, std::uint64_t b) {
    // FNV-1a over the label, then mix in the numeric tags.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::uint64_t s = h;
    s ^= splitmix64(a);
    std::uint64_t t = s + 0x632be59bd9b4e019ULL * (b + 1);
    return splitmix64(t);
}

Stream::Stream(std::uint64_t seed) : state_(seed) {
    // Warm up so that small seeds do not produce correlated leading draws.
    splitmix64(state_);
    splitmix64(state_);
}

Stream::Stream(std::uint64_t master_seed, std::string_view label,
               std::uint64_t a, std::uint64_t b)
    : Stream(master_seed ^ stream_id(label, a, b)) {}

std::uint64_t Stream::next_u64() { return splitmix64(state_); }

double Stream::uniform() {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Stream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Stream::uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

double Stream::normal(double mu, double sigma) {
    // Inverse-CDF sampling keeps the draw deterministic and portable.
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    return mu + sigma * stats::normal_inv_cdf(u);
}

double Stream::laplace(double mu, double b) {
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    return stats::laplace_inv_cdf(u, mu, b);
}

double Stream::student_t(int nu, double scale) {
    if (nu < 1) throw std::invalid_argument("student_t: nu must be >= 1");
    // Z / sqrt(chi^2_nu / nu) with the chi-square built from nu normals, so
    // only the normal sampler is needed.
    const double z = normal();
    double chi2 = 0.0;
    for (int i = 0; i < nu; ++i) {
        const double g = normal();
        chi2 += g * g;
    }
    return scale * z / std::sqrt(chi2 / static_cast<double>(nu));
}

double Stream::exponential(double rate) {
    double u = uniform();
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return -std::log1p(-u) / rate;
}

std::array<double, 3> dirichlet3(Stream& rng) {
    std::array<double, 3> e{rng.exponential(), rng.exponential(), rng.exponential()};
    const double total = e[0] + e[1] + e[2];
    return {e[0] / total, e[1] / total, e[2] / total};
}

} // namespace nvcvar::rng
