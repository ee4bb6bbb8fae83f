#include "nvcvar/harness.hpp"

#include "nvcvar/adaptive_selection.hpp"
#include "nvcvar/cvar_objective.hpp"
#include "nvcvar/kernels.hpp"
#include "nvcvar/rng.hpp"
#include "nvcvar/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nvcvar {

std::string method_name(Method m) {
    switch (m) {
        case Method::SA: return "SA";
        case Method::UM: return "UM";
        case Method::NF: return "NF";
        case Method::SQR: return "SQR";
        case Method::PLM: return "PLM";
        case Method::LM: return "LM";
        case Method::NPC: return "NPC";
        case Method::Oracle: return "ORACLE";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "SA") return Method::SA;
    if (name == "UM") return Method::UM;
    if (name == "NF") return Method::NF;
    if (name == "SQR") return Method::SQR;
    if (name == "PLM") return Method::PLM;
    if (name == "LM") return Method::LM;
    if (name == "NPC") return Method::NPC;
    if (name == "ORACLE") return Method::Oracle;
    throw std::invalid_argument("unknown method '" + name + "'");
}

namespace {

// ---------------------------------------------------------------------------
// Seasonal ARIMA by conditional sum of squares, for the non-featured method.
// Orders: (p,d,q) non-seasonal, (P,0,Q) at period 12. Small simplex search on
// the CSS objective; pre-sample innovations are zero.
// ---------------------------------------------------------------------------

struct ArimaFit {
    int p = 0, d = 0, q = 0, P = 0, Q = 0;
    std::vector<double> params;  // c, phi.., theta.., Phi?, Theta?
    double ssr = 0.0;
    double aicc = 0.0;
    double forecast = 0.0;            // one step ahead, original scale
    std::vector<double> residuals;    // in-sample innovations
};

constexpr int kSeason = 12;

std::vector<double> difference(std::span<const double> y, int d) {
    std::vector<double> w(y.begin(), y.end());
    for (int k = 0; k < d; ++k) {
        std::vector<double> next(w.size() - 1);
        for (std::size_t t = 1; t < w.size(); ++t) next[t - 1] = w[t] - w[t - 1];
        w = std::move(next);
    }
    return w;
}

struct LagPolys {
    // Expanded multiplicative polynomials: w_t = c + sum ar[k] w_{t-k} + e_t
    // + sum ma[k] e_{t-k}, k up to kSeason + 2.
    std::array<double, kSeason + 3> ar{};
    std::array<double, kSeason + 3> ma{};
    int max_lag = 0;
};

LagPolys expand_polys(int p, int q, int P, int Q, std::span<const double> params) {
    LagPolys l;
    int idx = 1; // params[0] = c
    std::array<double, 3> phi{};
    for (int i = 1; i <= p; ++i) phi[i] = params[idx++];
    std::array<double, 3> theta{};
    for (int i = 1; i <= q; ++i) theta[i] = params[idx++];
    const double sphi = P ? params[idx++] : 0.0;
    const double stheta = Q ? params[idx++] : 0.0;

    for (int i = 1; i <= p; ++i) l.ar[i] = phi[i];
    if (P) {
        l.ar[kSeason] += sphi;
        for (int i = 1; i <= p; ++i) l.ar[kSeason + i] -= phi[i] * sphi;
    }
    for (int i = 1; i <= q; ++i) l.ma[i] = theta[i];
    if (Q) {
        l.ma[kSeason] += stheta;
        for (int i = 1; i <= q; ++i) l.ma[kSeason + i] += theta[i] * stheta;
    }
    l.max_lag = std::max({p, q, P ? kSeason + p : 0, Q ? kSeason + q : 0});
    return l;
}

double css_objective(std::span<const double> w, int p, int q, int P, int Q,
                     std::span<const double> params, std::vector<double>* innovations) {
    // Soft stationarity/invertibility guard.
    for (std::size_t i = 1; i < params.size(); ++i)
        if (std::fabs(params[i]) > 0.99) return 1e30 * (1.0 + std::fabs(params[i]));
    const LagPolys l = expand_polys(p, q, P, Q, params);
    const double c = params[0];
    const int n = static_cast<int>(w.size());
    if (n <= l.max_lag + 2) return 1e30;
    std::vector<double> e(n, 0.0);
    double ssr = 0.0;
    for (int t = l.max_lag; t < n; ++t) {
        double pred = c;
        for (int k = 1; k <= l.max_lag; ++k) {
            if (l.ar[k] != 0.0) pred += l.ar[k] * w[t - k];
            if (l.ma[k] != 0.0) pred += l.ma[k] * e[t - k];
        }
        e[t] = w[t] - pred;
        ssr += e[t] * e[t];
    }
    if (innovations) *innovations = std::move(e);
    return ssr;
}

// Compact Nelder-Mead, deterministic, for the handful of CSS parameters.
std::vector<double> nelder_mead(const std::function<double(std::span<const double>)>& f,
                                std::vector<double> x0, int max_iter) {
    const std::size_t n = x0.size();
    std::vector<std::vector<double>> simplex(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        simplex[i + 1][i] += (x0[i] != 0.0 ? 0.1 * std::fabs(x0[i]) : 0.1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

    for (int it = 0; it < max_iter; ++it) {
        std::vector<std::size_t> ord(n + 1);
        std::iota(ord.begin(), ord.end(), 0);
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
            return fv[a] < fv[b] || (fv[a] == fv[b] && a < b);
        });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (std::size_t i = 0; i <= n; ++i) {
            s2.push_back(simplex[ord[i]]);
            f2.push_back(fv[ord[i]]);
        }
        simplex = std::move(s2);
        fv = std::move(f2);
        if (std::fabs(fv[n] - fv[0]) <= 1e-12 * (1.0 + std::fabs(fv[0]))) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / double(n);

        auto blend = [&](double coef) {
            std::vector<double> x(n);
            for (std::size_t j = 0; j < n; ++j)
                x[j] = centroid[j] + coef * (simplex[n][j] - centroid[j]);
            return x;
        };
        const std::vector<double> xr = blend(-1.0);
        const double fr = f(xr);
        if (fr < fv[0]) {
            const std::vector<double> xe = blend(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            const std::vector<double> xc = blend(0.5);
            const double fc = f(xc);
            if (fc < fv[n]) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    return simplex[best];
}

ArimaFit fit_arima(std::span<const double> y, int p, int d, int q, int P, int Q) {
    ArimaFit fit;
    fit.p = p;
    fit.d = d;
    fit.q = q;
    fit.P = P;
    fit.Q = Q;
    const std::vector<double> w = difference(y, d);
    const int k = 1 + p + q + P + Q;
    std::vector<double> x0(k, 0.1);
    x0[0] = stats::mean(w);

    const auto obj = [&](std::span<const double> params) {
        return css_objective(w, p, q, P, Q, params, nullptr);
    };
    fit.params = nelder_mead(obj, x0, 400);

    std::vector<double> innovations;
    fit.ssr = css_objective(w, p, q, P, Q, fit.params, &innovations);
    const LagPolys l = expand_polys(p, q, P, Q, fit.params);
    const int n_eff = static_cast<int>(w.size()) - l.max_lag;
    fit.residuals.assign(innovations.begin() + l.max_lag, innovations.end());

    const double sigma2 = fit.ssr / std::max(1, n_eff);
    const double kk = static_cast<double>(k);
    fit.aicc = n_eff * std::log(std::max(sigma2, 1e-300)) + 2.0 * kk +
               (n_eff - kk - 1.0 > 0.0 ? 2.0 * kk * (kk + 1.0) / (n_eff - kk - 1.0) : 1e6);

    // One-step-ahead forecast of w, then undifference.
    const int n = static_cast<int>(w.size());
    double pred = fit.params[0];
    for (int lag = 1; lag <= l.max_lag; ++lag) {
        if (l.ar[lag] != 0.0 && n - lag >= 0) pred += l.ar[lag] * w[n - lag];
        if (l.ma[lag] != 0.0 && n - lag >= 0) pred += l.ma[lag] * innovations[n - lag];
    }
    double fc = pred;
    if (d == 1) fc += y.back();
    fit.forecast = fc;
    return fit;
}

ArimaFit fit_arima_auto(std::span<const double> y, const NfOrders& orders) {
    if (orders.pinned()) return fit_arima(y, orders.p, orders.d, orders.q, orders.P, orders.Q);
    ArimaFit best;
    bool first = true;
    for (int d = 0; d <= 1; ++d)
        for (int p = 0; p <= 2; ++p)
            for (int q = 0; q <= 2; ++q)
                for (int P = 0; P <= 1; ++P)
                    for (int Q = 0; Q <= 1; ++Q) {
                        if (p + q + P + Q == 0) continue;
                        ArimaFit f = fit_arima(y, p, d, q, P, Q);
                        if (first || f.aicc < best.aicc) {
                            best = std::move(f);
                            first = false;
                        }
                    }
    return best;
}

// ---------------------------------------------------------------------------

std::vector<double> subset_row(std::span<const double> z, const std::vector<int>& features,
                               int full_cols) {
    if (features.empty()) return {z.begin(), z.end()};
    std::vector<double> out;
    out.reserve(features.size());
    for (int j : features) {
        if (j < 0 || j >= full_cols)
            throw std::invalid_argument("method feature subset: index out of range");
        out.push_back(z[j]);
    }
    return out;
}

double apply_mixture(const QuantileMixture& mix, const std::function<double(double)>& inv) {
    return mix.weight_low * inv(mix.level_low) + mix.weight_high * inv(mix.level_high);
}

OrderDecision finish(double order) {
    OrderDecision dec;
    if (order < 0.0) {
        dec.order = 0.0;
        dec.clamped = 1;
    } else {
        dec.order = order;
    }
    return dec;
}

} // namespace

OrderDecision method_order(const MethodSpec& method, const Dataset& history,
                           std::span<const double> next_features, double beta,
                           const ProfitSpec& spec, const SolveConfig& solver,
                           std::uint64_t iteration_seed) {
    const Eq8Params economics = method.eq8 ? *method.eq8 : eq8_params(spec);
    const QuantileMixture mix = cvar_quantile_mixture(economics, beta);
    const int s = history.rows();

    switch (method.method) {
        case Method::SA: {
            std::vector<double> sorted(history.demand);
            std::sort(sorted.begin(), sorted.end());
            OrderDecision dec = finish(apply_mixture(
                mix, [&](double p) { return empirical_inverse_cdf(sorted, p); }));
            dec.fit_rows = s;
            return dec;
        }
        case Method::UM:
        case Method::LM: {
            const DesignMatrix design = DesignMatrix::from_dataset(history, method.features, true);
            const Hypothesis fit = least_squares(design, history.demand);
            const std::vector<double> res = residuals(design, history.demand, fit);
            const double point =
                fit.predict(subset_row(next_features, method.features, history.cols()));
            double shift;
            if (method.method == Method::UM && method.known_error) {
                shift = apply_mixture(
                    mix, [&](double p) { return error_quantile(*method.known_error, p); });
            } else if (method.method == Method::UM) {
                // No error law supplied: degrade to a normal fit on the
                // residual scale.
                const double sd = std::sqrt(
                    std::max(stats::variance(res) * s / std::max(1, s - design.cols), 1e-300));
                const ErrorSpec law = ErrorSpec::normal(sd);
                shift = apply_mixture(mix, [&](double p) { return error_quantile(law, p); });
            } else {
                std::vector<double> sorted(res);
                std::sort(sorted.begin(), sorted.end());
                shift = apply_mixture(
                    mix, [&](double p) { return empirical_inverse_cdf(sorted, p); });
            }
            OrderDecision dec = finish(point + shift);
            dec.fit_rows = s;
            return dec;
        }
        case Method::NF: {
            const ArimaFit fit = fit_arima_auto(history.demand, method.nf);
            std::vector<double> sorted(fit.residuals);
            std::sort(sorted.begin(), sorted.end());
            OrderDecision dec = finish(fit.forecast + apply_mixture(mix, [&](double p) {
                                           return empirical_inverse_cdf(sorted, p);
                                       }));
            dec.fit_rows = s;
            return dec;
        }
        case Method::SQR: {
            const DesignMatrix design = DesignMatrix::from_dataset(history, method.features, true);
            SolveConfig qr_cfg = solver;
            qr_cfg.seed = iteration_seed;
            const Hypothesis h_low = quantile_regression(design, history.demand, mix.level_low, qr_cfg);
            const Hypothesis h_high =
                quantile_regression(design, history.demand, mix.level_high, qr_cfg);
            const std::vector<double> z = subset_row(next_features, method.features, history.cols());
            OrderDecision dec = finish(mix.weight_low * h_low.predict(z) +
                                       mix.weight_high * h_high.predict(z));
            dec.fit_rows = s;
            return dec;
        }
        case Method::PLM: {
            const Decomposition dec_pilot =
                decompose(history, method.features, Decomposition::Mode::PilotLeastSquares, true);
            const SelectionResult sel = select_extremes(dec_pilot, beta);
            // Refit on the selected rows only.
            const DesignMatrix full = DesignMatrix::from_dataset(history, method.features, true);
            DesignMatrix sub;
            sub.rows = static_cast<int>(sel.selected.size());
            sub.cols = full.cols;
            sub.names = full.names;
            sub.intercept = full.intercept;
            std::vector<double> sub_y;
            for (int t : sel.selected) {
                const auto row = full.row(t);
                sub.values.insert(sub.values.end(), row.begin(), row.end());
                sub_y.push_back(history.demand[t]);
            }
            const Hypothesis fit = least_squares(sub, sub_y);
            const std::vector<double> res = residuals(sub, sub_y, fit);
            std::vector<double> sorted(res);
            std::sort(sorted.begin(), sorted.end());
            const double point =
                fit.predict(subset_row(next_features, method.features, history.cols()));
            OrderDecision dec = finish(point + apply_mixture(mix, [&](double p) {
                                           return empirical_inverse_cdf(sorted, p);
                                       }));
            dec.fit_rows = static_cast<long>(sel.selected.size());
            return dec;
        }
        case Method::NPC: {
            const Decomposition dec_pilot =
                decompose(history, method.features, Decomposition::Mode::PilotLeastSquares, true);
            const SelectionResult sel = select_extremes(dec_pilot, beta);
            SolveConfig cfg = solver;
            cfg.seed = iteration_seed;
            const RiskEstimate est =
                minimize_npc(history, sel, spec, beta, cfg, method.features, true);
            const std::vector<double> z = subset_row(next_features, method.features, history.cols());
            OrderDecision dec = finish(est.hypothesis.predict(z));
            dec.fit_rows = static_cast<long>(sel.selected.size());
            return dec;
        }
        case Method::Oracle:
            throw std::invalid_argument("method_order: the oracle channel is handled by the backtest");
    }
    throw std::invalid_argument("method_order: unknown method");
}

double beta_downside_loss(std::span<const double> losses, double beta) {
    if (losses.empty()) throw std::invalid_argument("beta_downside_loss: empty loss list");
    const int n_tail = tail_count(beta, static_cast<int>(losses.size()));
    std::vector<double> sorted(losses.begin(), losses.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double acc = 0.0;
    for (int i = 0; i < n_tail; ++i) acc += sorted[i];
    return acc / n_tail;
}

double service_level(std::span<const double> orders, std::span<const double> demands) {
    if (orders.size() != demands.size())
        throw std::invalid_argument("service_level: length mismatch");
    if (orders.empty()) return 0.0;
    double hit = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (orders[i] >= demands[i]) hit += 1.0;
    return hit / static_cast<double>(orders.size());
}

double mean_absolute_error(std::span<const double> orders, std::span<const double> demands) {
    double acc = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) acc += std::fabs(orders[i] - demands[i]);
    return orders.empty() ? 0.0 : acc / static_cast<double>(orders.size());
}

double mean_pinball_score(std::span<const double> orders, std::span<const double> demands,
                          double tau) {
    double acc = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const double u = demands[i] - orders[i];
        acc += u * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return orders.empty() ? 0.0 : acc / static_cast<double>(orders.size());
}

double root_mean_squared_error(std::span<const double> orders, std::span<const double> demands) {
    double acc = 0.0;
    for (std::size_t i = 0; i < orders.size(); ++i)
        acc += (orders[i] - demands[i]) * (orders[i] - demands[i]);
    return orders.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(orders.size()));
}

void recompute_aggregates(MethodRun& run, double beta, double rmps_tau) {
    std::vector<double> orders, demands, losses;
    run.failures = 0;
    for (const IterationRow& row : run.rows) {
        if (row.failed) {
            ++run.failures;
            continue;
        }
        orders.push_back(row.order);
        demands.push_back(row.demand);
        losses.push_back(row.loss);
    }
    if (losses.empty()) {
        run.downside_loss = run.service_level = run.mae = run.mps = run.rmse = 0.0;
        return;
    }
    run.downside_loss = beta_downside_loss(losses, beta);
    run.service_level = service_level(orders, demands);
    run.mae = mean_absolute_error(orders, demands);
    run.mps = mean_pinball_score(orders, demands, rmps_tau);
    run.rmse = root_mean_squared_error(orders, demands);
}

BacktestReport rolling_backtest(const BacktestConfig& cfg, const Dataset& data) {
    if (cfg.origin < 2 || cfg.iterations < 1)
        throw std::invalid_argument("rolling_backtest: origin and iterations must be positive");
    if (!(cfg.beta > 0.5 && cfg.beta < 1.0))
        throw std::invalid_argument("rolling_backtest: beta must lie in (0.5, 1)");
    if (cfg.origin + cfg.iterations > data.rows())
        throw std::invalid_argument("rolling_backtest: insufficient data (origin + iterations > rows)");
    if (cfg.methods.empty())
        throw std::invalid_argument("rolling_backtest: no methods requested");

    BacktestReport report;
    report.origin = cfg.origin;
    report.iterations = cfg.iterations;
    report.beta = cfg.beta;
    report.seed = cfg.seed;
    report.spec_label = spec_name(cfg.spec);
    report.rmps_tau = cfg.rmps_tau >= 0.0
                          ? cfg.rmps_tau
                          : cvar_quantile_mixture(eq8_params(cfg.spec), cfg.beta).level_low;

    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const MethodSpec& mspec = cfg.methods[mi];
        MethodRun run;
        run.spec = mspec;
        run.rows.resize(cfg.iterations);
        const auto t0 = std::chrono::steady_clock::now();
        long clamped_total = 0;

        kernels::parallel_for(
            cfg.iterations,
            [&](long long i) {
                IterationRow& row = run.rows[static_cast<std::size_t>(i)];
                const int target = cfg.origin + static_cast<int>(i);
                row.demand = data.demand[target];
                if (mspec.method == Method::Oracle) {
                    row.order = row.demand;
                    row.fit_rows = 0;
                    row.loss = loss(cfg.spec, row.order, row.demand);
                    return;
                }
                const Dataset window = data.slice(static_cast<int>(i), cfg.origin);
                const std::uint64_t iter_seed =
                    cfg.seed ^ rng::stream_id("backtest", mi, static_cast<std::uint64_t>(i));
                try {
                    const OrderDecision dec = method_order(mspec, window, data.row(target),
                                                           cfg.beta, cfg.spec, cfg.solver,
                                                           iter_seed);
                    row.order = dec.order;
                    row.fit_rows = dec.fit_rows;
                    row.loss = loss(cfg.spec, row.order, row.demand);
#ifdef _OPENMP
#pragma omp atomic
#endif
                    clamped_total += dec.clamped;
                } catch (const std::exception&) {
                    row.failed = true;
                    row.order = std::numeric_limits<double>::quiet_NaN();
                    row.loss = std::numeric_limits<double>::quiet_NaN();
                }
            },
            cfg.parallel);

        const auto t1 = std::chrono::steady_clock::now();
        run.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        run.clamped_orders = clamped_total;
        recompute_aggregates(run, cfg.beta, report.rmps_tau);
        report.methods.push_back(std::move(run));
    }
    return report;
}

RelativeRow relative_metrics_from_aggregates(double dl_sa, double dl_um, double dl_m,
                                             double sl_sa, double sl_um, double sl_m) {
    RelativeRow row;
    const double dl_denominator = dl_sa - dl_um;
    if (std::fabs(dl_denominator) >= 1e-9)
        row.rel_downside_loss = (dl_sa - dl_m) / dl_denominator;
    const double sl_denominator = std::fabs(sl_sa - sl_um);
    if (sl_denominator >= 1e-9)
        row.rel_service_level = 1.0 - std::fabs(sl_m - sl_um) / sl_denominator;
    return row;
}

std::vector<RelativeRow> relative_metrics(const BacktestReport& report) {
    const MethodRun* sa = nullptr;
    const MethodRun* um = nullptr;
    for (const MethodRun& run : report.methods) {
        if (run.spec.method == Method::SA && !sa) sa = &run;
        if (run.spec.method == Method::UM && !um) um = &run;
    }
    if (!sa || !um)
        throw std::invalid_argument("relative_metrics: report must contain SA and UM runs");

    std::vector<RelativeRow> rows;
    for (const MethodRun& run : report.methods) {
        RelativeRow row = relative_metrics_from_aggregates(
            sa->downside_loss, um->downside_loss, run.downside_loss, sa->service_level,
            um->service_level, run.service_level);
        row.method = run.spec.display_name();
        if (sa->mae > 1e-12) row.rmae = run.mae / sa->mae;
        if (sa->mps > 1e-12) row.rmps = run.mps / sa->mps;
        if (sa->rmse > 1e-12) row.rrmse = run.rmse / sa->rmse;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {
std::string opt_cell(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("/");
}
} // namespace

void write_report_rows_csv(const std::string& path, const BacktestReport& report,
                           const Metadata& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "# nvcvar backtest-rows v1\n";
    Metadata all = meta;
    all["origin"] = std::to_string(report.origin);
    all["iterations"] = std::to_string(report.iterations);
    all["beta"] = format_double(report.beta);
    all["rmps_tau"] = format_double(report.rmps_tau);
    all["seed"] = std::to_string(report.seed);
    all["spec"] = report.spec_label;
    for (const auto& [k, v] : all) out << "# " << k << "=" << v << "\n";
    out << "method,label,iteration,order,demand,loss,fit_rows,failed\n";
    for (const MethodRun& run : report.methods) {
        const std::string mname = method_name(run.spec.method);
        const std::string label = run.spec.display_name();
        for (std::size_t i = 0; i < run.rows.size(); ++i) {
            const IterationRow& r = run.rows[i];
            out << mname << "," << label << "," << i + 1 << "," << format_double(r.order) << ","
                << format_double(r.demand) << "," << format_double(r.loss) << "," << r.fit_rows
                << "," << (r.failed ? 1 : 0) << "\n";
        }
    }
}

BacktestReport read_report_rows_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    BacktestReport report;
    std::map<std::string, std::string> meta;
    std::string line;
    bool have_header = false;
    std::vector<std::string> order_of_methods;
    std::map<std::string, MethodRun> runs;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(' '));
                key.erase(key.find_last_not_of(' ') + 1);
                meta[key] = line.substr(eq + 1);
            }
            continue;
        }
        if (!have_header) {
            have_header = true; // column names are fixed by the schema line
            continue;
        }
        std::stringstream ss(line);
        std::string mname, label, cell;
        std::getline(ss, mname, ',');
        std::getline(ss, label, ',');
        IterationRow row;
        std::getline(ss, cell, ','); // iteration index, implicit by order
        std::getline(ss, cell, ',');
        row.order = std::strtod(cell.c_str(), nullptr);
        std::getline(ss, cell, ',');
        row.demand = std::strtod(cell.c_str(), nullptr);
        std::getline(ss, cell, ',');
        row.loss = std::strtod(cell.c_str(), nullptr);
        std::getline(ss, cell, ',');
        row.fit_rows = std::strtol(cell.c_str(), nullptr, 10);
        std::getline(ss, cell, ',');
        row.failed = cell == "1";
        const std::string key = mname + "\t" + label;
        if (!runs.count(key)) {
            MethodRun run;
            run.spec.method = method_from_name(mname);
            run.spec.label = label;
            runs[key] = std::move(run);
            order_of_methods.push_back(key);
        }
        runs[key].rows.push_back(row);
    }
    if (order_of_methods.empty()) throw DataError("'" + path + "': no backtest rows found");

    report.origin = meta.count("origin") ? std::stoi(meta["origin"]) : 0;
    report.iterations = meta.count("iterations") ? std::stoi(meta["iterations"]) : 0;
    report.beta = meta.count("beta") ? std::strtod(meta["beta"].c_str(), nullptr) : 0.95;
    report.rmps_tau =
        meta.count("rmps_tau") ? std::strtod(meta["rmps_tau"].c_str(), nullptr) : 0.05;
    report.seed = meta.count("seed") ? std::stoull(meta["seed"]) : 0;
    report.spec_label = meta.count("spec") ? meta["spec"] : "";
    for (const std::string& key : order_of_methods) {
        MethodRun& run = runs[key];
        recompute_aggregates(run, report.beta, report.rmps_tau);
        report.methods.push_back(std::move(run));
    }
    if (report.iterations == 0 && !report.methods.empty())
        report.iterations = static_cast<int>(report.methods.front().rows.size());
    return report;
}

void write_report_aggregates_csv(const std::string& path, const BacktestReport& report,
                                 const Metadata& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "# nvcvar backtest-aggregates v1\n";
    Metadata all = meta;
    all["beta"] = format_double(report.beta);
    all["origin"] = std::to_string(report.origin);
    all["iterations"] = std::to_string(report.iterations);
    all["spec"] = report.spec_label;
    for (const auto& [k, v] : all) out << "# " << k << "=" << v << "\n";

    std::vector<RelativeRow> rel;
    bool have_rel = true;
    try {
        rel = relative_metrics(report);
    } catch (const std::exception&) {
        have_rel = false;
    }

    out << "method,label,downside_loss,service_level,mae,mps,rmse,rel_dl,rel_sl,rmae,rmps,"
           "rrmse,wall_ms,clamped_orders,failures,fit_rows\n";
    for (std::size_t i = 0; i < report.methods.size(); ++i) {
        const MethodRun& run = report.methods[i];
        long fit_rows = 0;
        for (const auto& r : run.rows) fit_rows = std::max(fit_rows, r.fit_rows);
        out << method_name(run.spec.method) << "," << run.spec.display_name() << ","
            << format_double(run.downside_loss) << "," << format_double(run.service_level) << ","
            << format_double(run.mae) << "," << format_double(run.mps) << ","
            << format_double(run.rmse) << ",";
        if (have_rel) {
            out << opt_cell(rel[i].rel_downside_loss) << "," << opt_cell(rel[i].rel_service_level)
                << "," << opt_cell(rel[i].rmae) << "," << opt_cell(rel[i].rmps) << ","
                << opt_cell(rel[i].rrmse);
        } else {
            out << "/,/,/,/,/";
        }
        out << "," << format_double(run.wall_ms) << "," << run.clamped_orders << ","
            << run.failures << "," << fit_rows << "\n";
    }
}

} // namespace nvcvar
