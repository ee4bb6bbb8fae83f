#pragma once

#include "nvcvar/closed_form.hpp"
#include "nvcvar/core_model.hpp"
#include "nvcvar/datagen.hpp"
#include "nvcvar/dataset.hpp"
#include "nvcvar/optimizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nvcvar {

/// Benchmark and competing order policies. Oracle (order = realized demand)
/// is a test-only sanity channel, not part of the method set.
enum class Method { SA, UM, NF, SQR, PLM, LM, NPC, Oracle };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

/// Pinned seasonal ARIMA orders for the NF policy; any negative entry
/// requests the corrected-AIC grid search over (p,d,q) in {0,1,2}x{0,1}x{0,1,2}
/// with optional seasonal lag-12 terms (P,Q in {0,1}).
struct NfOrders {
    int p = -1, d = -1, q = -1, P = -1, Q = -1;
    bool pinned() const { return p >= 0 && d >= 0 && q >= 0 && P >= 0 && Q >= 0; }
};

struct MethodSpec {
    Method method = Method::SA;
    std::vector<int> features;              // 0-based columns; empty = all
    std::optional<ErrorSpec> known_error;   // UM's true error law
    NfOrders nf{};
    std::optional<Eq8Params> eq8;           // override the closed-form economics
    std::string label;                      // defaults to method_name
    std::string display_name() const { return label.empty() ? method_name(method) : label; }
};

struct BacktestConfig {
    int origin = 300;
    int iterations = 200;
    double beta = 0.95;
    ProfitSpec spec = LinearParams::costs(20.0, 8.0, 3.0, 7.0);
    std::vector<MethodSpec> methods;
    SolveConfig solver{};
    std::uint64_t seed = 1;
    bool parallel = true;
    double rmps_tau = -1.0; // <0: use the closed-form low quantile level
};

struct IterationRow {
    double order = 0.0;
    double demand = 0.0;
    double loss = 0.0;
    long fit_rows = 0;  // distinct rows entering the model-fitting objective
    bool failed = false;
};

struct MethodRun {
    MethodSpec spec;
    std::vector<IterationRow> rows;
    // Aggregates (recomputable from rows; recompute_aggregates does exactly that).
    double downside_loss = 0.0;
    double service_level = 0.0;
    double mae = 0.0;
    double mps = 0.0;
    double rmse = 0.0;
    double wall_ms = 0.0;
    long clamped_orders = 0;
    int failures = 0;
};

struct BacktestReport {
    int origin = 0;
    int iterations = 0;
    double beta = 0.0;
    double rmps_tau = 0.0;
    std::uint64_t seed = 0;
    std::string spec_label;
    std::vector<MethodRun> methods;
};

struct OrderDecision {
    double order = 0.0;
    long fit_rows = 0;
    bool failed = false;
    long clamped = 0;
};

/// One-step-ahead order decision from a history window. `history` is the
/// training window in time order; `next_features` the feature row of the
/// period being ordered for.
OrderDecision method_order(const MethodSpec& method, const Dataset& history,
                           std::span<const double> next_features, double beta,
                           const ProfitSpec& spec, const SolveConfig& solver,
                           std::uint64_t iteration_seed);

/// Rolling-origin evaluation: for each iteration i, fit on rows
/// [i, i+origin), order for row i+origin, record the realized loss; the
/// window slides by one. Iterations are independent and run in parallel;
/// per-iteration RNG streams derive from (seed, method, iteration).
BacktestReport rolling_backtest(const BacktestConfig& cfg, const Dataset& data);

/// Mean of the largest ceil((1-beta)*N) losses.
double beta_downside_loss(std::span<const double> losses, double beta);

/// Fraction of periods with order >= demand.
double service_level(std::span<const double> orders, std::span<const double> demands);

double mean_absolute_error(std::span<const double> orders, std::span<const double> demands);
double mean_pinball_score(std::span<const double> orders, std::span<const double> demands,
                          double tau);
double root_mean_squared_error(std::span<const double> orders, std::span<const double> demands);

void recompute_aggregates(MethodRun& run, double beta, double rmps_tau);

/// Relative measures against the SA..UM axis. Entries are empty ("/" in the
/// rendered tables) when the reference denominator degenerates.
struct RelativeRow {
    std::string method;
    std::optional<double> rel_downside_loss; // (DL_SA - DL_m) / (DL_SA - DL_UM)
    std::optional<double> rel_service_level; // 1 - |SL_m - SL_UM| / |SL_SA - SL_UM|
    std::optional<double> rmae;              // MAE_m / MAE_SA
    std::optional<double> rmps;
    std::optional<double> rrmse;
};

std::vector<RelativeRow> relative_metrics(const BacktestReport& report);

RelativeRow relative_metrics_from_aggregates(double dl_sa, double dl_um, double dl_m,
                                             double sl_sa, double sl_um, double sl_m);

/// Row-level and aggregate CSV emission/ingestion (schema version in the
/// leading comment line).
void write_report_rows_csv(const std::string& path, const BacktestReport& report,
                           const Metadata& meta = {});
BacktestReport read_report_rows_csv(const std::string& path);
void write_report_aggregates_csv(const std::string& path, const BacktestReport& report,
                                 const Metadata& meta = {});

} // namespace nvcvar
