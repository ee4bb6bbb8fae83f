#pragma once

#include "nvcvar/adaptive_selection.hpp"
#include "nvcvar/core_model.hpp"
#include "nvcvar/cvar_objective.hpp"
#include "nvcvar/dataset.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nvcvar {

/// Dense column design matrix (row-major) with named columns. from_dataset
/// prepends a constant column when intercept is requested.
struct DesignMatrix {
    std::vector<double> values;
    int rows = 0;
    int cols = 0;
    std::vector<std::string> names;
    bool intercept = false;

    double at(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }
    std::span<const double> row(int i) const {
        return {values.data() + static_cast<std::size_t>(i) * cols,
                static_cast<std::size_t>(cols)};
    }

    static DesignMatrix from_dataset(const Dataset& data, std::span<const int> feature_subset,
                                     bool intercept);
};

struct SolveConfig {
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;
    double objective_tolerance = 1e-10;
    int restarts = 5;
    double hinge_temperature = 0.0; // 0 = exact subgradient
    std::uint64_t seed = 0;
    int lbfgs_memory = 10;
};

/// Joint minimizer output: the fitted order rule, the optimized risk
/// threshold, and the achieved risk value, plus solve diagnostics.
struct RiskEstimate {
    Hypothesis hypothesis;
    double alpha = 0.0;
    double cvar_value = 0.0;
    double initial_objective = 0.0;
    int restarts_used = 0;
    int iterations = 0;
    bool converged = false;
    int exceedance_count = 0;
    long clamped = 0;
};

/// Minimize the tailored risk jointly over (gamma, alpha) by limited-memory
/// quasi-Newton descent with multi-start, followed by a coordinate polish and
/// an alpha re-snap to the exact exceedance threshold whenever that strictly
/// lowers the objective. Only the selected rows enter the objective.
RiskEstimate minimize_npc(const Dataset& data, const SelectionResult& sel,
                          const ProfitSpec& spec, double beta, const SolveConfig& cfg,
                          std::span<const int> feature_subset = {}, bool intercept = true);

/// Same machinery over the full-sample empirical risk (order quantity is the
/// scalar decision variable).
struct SaaResult {
    double order = 0.0;
    double alpha = 0.0;
    double cvar_value = 0.0;
    bool converged = false;
};

SaaResult minimize_saa(std::span<const double> demand_history, const ProfitSpec& spec,
                       double beta, const SolveConfig& cfg);

/// Pinball-loss regression at quantile level tau via iteratively reweighted
/// least squares with interior damping, finished by exact coordinate-wise
/// breakpoint searches (which also certify that no single-coordinate move
/// improves the objective beyond tolerance). Flat optima resolve to their
/// left endpoint, matching the left-continuous quantile convention.
Hypothesis quantile_regression(const DesignMatrix& design, std::span<const double> y,
                               double tau, const SolveConfig& cfg = {});

double pinball_objective(const DesignMatrix& design, std::span<const double> y, double tau,
                         const Hypothesis& h);

/// Ordinary least squares through a rank-revealing (column-pivoted QR)
/// decomposition; rank deficiency is an error naming the dependent columns.
Hypothesis least_squares(const DesignMatrix& design, std::span<const double> y);

std::vector<double> residuals(const DesignMatrix& design, std::span<const double> y,
                              const Hypothesis& h);

/// Directional-derivative stationarity for the nonsmooth objectives: checks
/// that no +/- coordinate direction descends faster than -tolerance, by
/// forward differences at a step scaled to the coordinate.
struct StationarityReport {
    bool stationary = false;
    double worst_directional_derivative = 0.0;
    int worst_coordinate = -1;
};

StationarityReport check_coordinate_stationarity(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> point, double tolerance, double step_scale = 1e-4);

/// Tailored-risk objective value at an explicit (gamma, alpha) point; exposed
/// so tests and stationarity checks evaluate exactly what the solver saw.
double npc_objective(const Dataset& data, const SelectionResult& sel, const ProfitSpec& spec,
                     const DesignMatrix& design, std::span<const double> theta);

} // namespace nvcvar
