#pragma once

#include "nvcvar/core_model.hpp"
#include "nvcvar/dataset.hpp"

#include <span>
#include <vector>

namespace nvcvar {

/// Linear order rule h(z) = z' gamma, optionally with a leading intercept.
/// With intercept set, coef[0] is the constant and coef[1..] align with the
/// feature columns; predictions are NOT clamped here (risk evaluation clamps
/// and counts).
struct Hypothesis {
    std::vector<double> coef;
    bool intercept = false;

    double predict(std::span<const double> z) const;
    int feature_count() const {
        return static_cast<int>(coef.size()) - (intercept ? 1 : 0);
    }
};

/// Counts order predictions clamped to zero during loss evaluation. Negative
/// orders are undefined in the model; they are surfaced, not hidden.
struct ClampStats {
    long clamped = 0;
};

/// Tail cardinality ceil((1-beta)*s), snapped against floating-point noise so
/// that e.g. 0.05*120 counts as exactly 6.
int tail_count(double beta, int s);

/// Discrete risk threshold: the unique sample value such that exactly
/// m = ceil((1-beta)*s) losses strictly exceed it, along with the exceedance
/// index set S (|S| = m, stable original-index order under ties).
struct VarResult {
    double alpha = 0.0;
    int m = 0;
    std::vector<int> exceedance; // S, sorted by original index
    bool tie_warning = false;
};

/// Requires 0.5 < beta < 1 and at least 2 samples. Ties straddling the
/// threshold (within 1e-12 relative) are resolved by stable index order and
/// flagged via tie_warning.
VarResult discrete_var(std::span<const double> losses, double beta);

/// alpha + sum_i [losses_i - alpha]+ / ((1-beta) s). beta in [0,1).
double ru_function(std::span<const double> losses, double alpha, double beta);
double ru_function_serial(std::span<const double> losses, double alpha, double beta);

/// min over alpha of ru_function, computed from order statistics.
double cvar_from_losses(std::span<const double> losses, double beta);

/// Per-row losses L(h(z_t), d_t) with negative predictions clamped to zero.
std::vector<double> pointwise_losses(const Hypothesis& h, const Dataset& data,
                                     const ProfitSpec& spec, ClampStats* stats = nullptr);

/// Empirical feature-based risk: the Rockafellar-Uryasev objective with the
/// order rule h evaluated per observation.
double empirical_feature_risk(const Hypothesis& h, const Dataset& data, const ProfitSpec& spec,
                              double alpha, double beta, ClampStats* stats = nullptr);

} // namespace nvcvar
