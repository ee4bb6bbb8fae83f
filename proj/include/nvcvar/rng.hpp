#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace nvcvar::rng {

// splitmix64 step; used both as a generator seeder and as a mixing function.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_id(std::string_view label, std::uint64_t a = 0, std::uint64_t b = 0);

/// Deterministic random stream. Streams are derived from a master seed plus a
/// label (e.g. "feature", 2), so parallel code can give every independent unit
/// of work its own stream and stay invariant to thread count and schedule.
///
/// All draws go through the 53-bit uniform and inverse-CDF transforms below,
/// never through std:: distributions, so a given (seed, label) sequence is
/// identical across standard library implementations.
class Stream {
public:
    explicit Stream(std::uint64_t seed);
    Stream(std::uint64_t master_seed, std::string_view label,
           std::uint64_t a = 0, std::uint64_t b = 0);

    std::uint64_t next_u64();

    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi);        // inclusive bounds
    double normal(double mu = 0.0, double sigma = 1.0);
    double laplace(double mu, double b);
    double student_t(int nu, double scale = 1.0);
    double exponential(double rate = 1.0);

private:
    // xoshiro-free choice: splitmix64 itself is a fine generator for this
    // workload and keeps the implementation self-contained.
    std::uint64_t state_;
};

/// Dirichlet(1,1,1) draw: three exponential spacings, normalized.
std::array<double, 3> dirichlet3(Stream& rng);

} // namespace nvcvar::rng
