#pragma once

#include "nvcvar/adaptive_selection.hpp"
#include "nvcvar/harness.hpp"

#include <string>

namespace nvcvar {

/// Static SVG plots built from report data: no interactivity, just the three
/// figures the batch workflow needs.

/// Histogram of per-iteration losses per method, with each method's downside
/// loss marked by a dashed line.
void write_loss_histogram_svg(const std::string& path, const BacktestReport& report,
                              const std::string& config_hash = "");

/// Demand vs. order line series for one method.
void write_series_svg(const std::string& path, const BacktestReport& report,
                      const std::string& method_label, const std::string& config_hash = "");

/// Residual scatter (index vs. irregular component) with the selection band
/// edges dashed and the exceedance rows shaded.
void write_selection_scatter_svg(const std::string& path, const Decomposition& dec,
                                 const SelectionResult& sel, const SubsetReport& subset,
                                 const std::string& config_hash = "");

} // namespace nvcvar
