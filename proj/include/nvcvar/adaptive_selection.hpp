#pragma once

#include "nvcvar/core_model.hpp"
#include "nvcvar/cvar_objective.hpp"
#include "nvcvar/dataset.hpp"

#include <span>
#include <string>
#include <vector>

namespace nvcvar {

/// Demand split into a systematic component T and an irregular component eps,
/// row-wise: systematic[t] + irregular[t] == demand[t].
struct Decomposition {
    enum class Mode { Given, PilotLeastSquares };
    std::vector<double> systematic;
    std::vector<double> irregular;
    Mode mode = Mode::Given;
};

Decomposition make_given_decomposition(const Dataset& data, std::vector<double> systematic);

/// Given mode passes user-supplied systematic components through (validated
/// against demand). PilotLeastSquares fits OLS of demand on the selected
/// feature columns (plus intercept when requested) and takes the residuals as
/// the irregular component. Requires s > p; a rank-deficient feature matrix
/// is an error naming the dependent columns.
Decomposition decompose(const Dataset& data, std::span<const int> feature_subset,
                        Decomposition::Mode mode, bool intercept = true);

/// The 2m extreme-residual rows: indices of the m smallest plus m largest
/// irregular components, m = ceil((1-beta)s). eps_selected holds the chosen
/// residuals in ascending order. Ties are broken by original index (stable)
/// and flagged.
struct SelectionResult {
    std::vector<int> selected;      // M, sorted by original index
    std::vector<int> lower;         // m smallest, ascending residual
    std::vector<int> upper;         // m largest, ascending residual
    std::vector<double> eps_selected;
    int m = 0;
    double beta = 0.0;
    bool tie_warning = false;
};

/// Requires 0.5 < beta < 1 and 2*ceil((1-beta)s) <= s.
SelectionResult select_extremes(const Decomposition& dec, double beta);

/// Tailored risk: alpha + (1/m) * sum over the selected rows of the hinge
/// excess. Only the exceedance rows contribute, hence the denominator m
/// rather than 2m.
double tailored_risk(const Hypothesis& h, double alpha, const Dataset& data,
                     const SelectionResult& sel, const ProfitSpec& spec, double beta,
                     ClampStats* stats = nullptr);

/// Subset check: with alpha the discrete risk threshold of the full-data
/// losses, the exceedance set S must be contained in the selected set M
/// whenever the loss has monotone tails. Violations are listed and paired
/// with the tail probe so an assumption failure is distinguishable from a
/// genuine defect.
struct SubsetReport {
    std::vector<int> exceedance;    // S
    std::vector<int> selected;      // M
    std::vector<int> violations;    // S \ M
    bool holds = false;
    bool tail_assumption_ok = false;
    double alpha = 0.0;
    int m = 0;
};

SubsetReport verify_subset_property(const Dataset& data, const SelectionResult& sel,
                                    const Hypothesis& h, const ProfitSpec& spec, double beta);

/// Selection rows as CSV (index, residual, tail tag) for scatter plots.
void export_selection_csv(const std::string& path, const Decomposition& dec,
                          const SelectionResult& sel, const Metadata& meta = {});

/// Autocorrelation diagnostic for the estimated irregular components
/// (Ljung-Box Q over the first `lags` lags). Reported only; the selection
/// makes no correction for dependent residuals.
struct ResidualDiagnostics {
    double ljung_box_q = 0.0;
    int lags = 0;
    std::vector<double> acf;
};

ResidualDiagnostics residual_diagnostics(const Decomposition& dec, int lags = 10);

} // namespace nvcvar
