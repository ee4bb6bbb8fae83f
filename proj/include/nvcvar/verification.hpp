#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nvcvar {

/// Randomized property trials for the adaptive-selection guarantees: with a
/// monotone-tailed loss, a constant systematic component and a constant order
/// rule, the exceedance set is contained in the selected set and the tailored
/// risk evaluated at the discrete risk threshold equals the full-sample
/// empirical risk. Trials draw the loss family, beta, the sample size (kept
/// compatible with beta so the tail count is integral), the residual law and
/// the order level.
struct TrialConfig {
    int trials = 1000;
    std::uint64_t seed = 1;
    bool parallel = true;
    double tolerance = 1e-9; // relative equality tolerance
};

struct TrialOutcome {
    int total = 0;
    int equality_ok = 0;
    int subset_ok = 0;
    double max_relative_error = 0.0;
    std::vector<std::string> failures; // first few, for diagnostics
    bool all_ok() const { return equality_ok == total && subset_ok == total; }
};

TrialOutcome run_theorem_trials(const TrialConfig& cfg);

/// Same trial engine with a bounded oscillating loss that violates the
/// monotone-tail requirement: the subset property is expected to fail and the
/// tail probe must flag the violation. Returns the count of trials where the
/// subset property broke.
struct ViolationOutcome {
    int total = 0;
    int subset_violations = 0;
    int probe_flagged = 0;
};

ViolationOutcome run_bounded_loss_trials(int trials, std::uint64_t seed);

} // namespace nvcvar
