// Benchmark comparing the OpenMP kernels against their serial reference
// implementations. Prints one line per kernel with both timings and the
// speedup; results are checked for agreement while timing.

#include "nvcvar/cvar_objective.hpp"
#include "nvcvar/datagen.hpp"
#include "nvcvar/harness.hpp"
#include "nvcvar/kernels.hpp"
#include "nvcvar/rng.hpp"
#include "nvcvar/verification.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace {

using clock_type = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn(); // warm up
    const auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool agree) {
    std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n",
                name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
                agree ? "results agree" : "RESULTS DIFFER");
}

} // namespace

int main() {
    using namespace nvcvar;
    std::printf("threads available: %d\n\n", kernels::max_threads());

    {
        const std::size_t n = 1 << 21;
        std::vector<double> losses(n);
        rng::Stream stream(7, "bench-losses");
        for (double& v : losses) v = stream.normal(100.0, 40.0);
        const double alpha = 120.0;
        double a = 0.0, b = 0.0;
        const double serial_ms =
            time_ms([&] { a = kernels::hinge_excess_sum_serial(losses, alpha); }, 20);
        const double parallel_ms =
            time_ms([&] { b = kernels::hinge_excess_sum(losses, alpha); }, 20);
        report("hinge reduction (2^21)", serial_ms, parallel_ms,
               std::fabs(a - b) <= 1e-9 * std::fabs(a));
    }

    {
        const auto specs = baseline_feature_specs();
        std::vector<double> out;
        double checksum_parallel = 0.0, checksum_serial = 0.0;
        const int s = 20000;
        const double parallel_ms =
            time_ms([&] { out = gen_features(specs, s, 11); }, 5);
        for (double v : out) checksum_parallel += v;
        const int saved = kernels::max_threads();
        kernels::set_threads(1);
        const double serial_ms = time_ms([&] { out = gen_features(specs, s, 11); }, 5);
        kernels::set_threads(saved);
        for (double v : out) checksum_serial += v;
        report("feature generation (4x20k)", serial_ms, parallel_ms,
               checksum_serial == checksum_parallel);
    }

    {
        TrialConfig cfg;
        cfg.trials = 200;
        cfg.seed = 3;
        TrialOutcome a, b;
        cfg.parallel = false;
        const double serial_ms = time_ms([&] { a = run_theorem_trials(cfg); }, 3);
        cfg.parallel = true;
        const double parallel_ms = time_ms([&] { b = run_theorem_trials(cfg); }, 3);
        report("selection trials (200)", serial_ms, parallel_ms,
               a.equality_ok == b.equality_ok && a.subset_ok == b.subset_ok);
    }

    {
        const BaselineResult base = generate_baseline({.s = 260, .seed = 19});
        BacktestConfig cfg;
        cfg.origin = 200;
        cfg.iterations = 60;
        cfg.beta = 0.95;
        cfg.spec = LinearParams::costs(20.0, 8.0, 3.0, 7.0);
        cfg.seed = 19;
        cfg.methods.push_back({.method = Method::SA});
        MethodSpec npc;
        npc.method = Method::NPC;
        cfg.methods.push_back(npc);
        BacktestReport ra, rb;
        cfg.parallel = false;
        const double serial_ms = time_ms([&] { ra = rolling_backtest(cfg, base.data); }, 1);
        cfg.parallel = true;
        const double parallel_ms = time_ms([&] { rb = rolling_backtest(cfg, base.data); }, 1);
        bool agree = true;
        for (std::size_t m = 0; m < ra.methods.size(); ++m)
            for (std::size_t i = 0; i < ra.methods[m].rows.size(); ++i)
                agree &= ra.methods[m].rows[i].order == rb.methods[m].rows[i].order;
        report("rolling backtest (60 iters)", serial_ms, parallel_ms, agree);
    }

    return 0;
}
