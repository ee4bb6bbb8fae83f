#include "nvcvar/optimizer.hpp"

#include "nvcvar/kernels.hpp"
#include "nvcvar/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace nvcvar {

DesignMatrix DesignMatrix::from_dataset(const Dataset& data, std::span<const int> feature_subset,
                                        bool intercept) {
    std::vector<int> cols(feature_subset.begin(), feature_subset.end());
    if (cols.empty()) {
        cols.resize(data.cols());
        std::iota(cols.begin(), cols.end(), 0);
    }
    DesignMatrix m;
    m.rows = data.rows();
    m.cols = static_cast<int>(cols.size()) + (intercept ? 1 : 0);
    m.intercept = intercept;
    if (intercept) m.names.push_back("(intercept)");
    for (int j : cols) {
        if (j < 0 || j >= data.cols())
            throw std::invalid_argument("DesignMatrix: feature index out of range");
        m.names.push_back(data.feature_names[j]);
    }
    m.values.resize(static_cast<std::size_t>(m.rows) * m.cols);
    for (int t = 0; t < m.rows; ++t) {
        std::size_t base = static_cast<std::size_t>(t) * m.cols;
        int k = 0;
        if (intercept) m.values[base + k++] = 1.0;
        for (int j : cols) m.values[base + k++] = data.z(t, j);
    }
    return m;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd to_eigen(const DesignMatrix& d) {
    MatrixXd a(d.rows, d.cols);
    for (int i = 0; i < d.rows; ++i)
        for (int j = 0; j < d.cols; ++j) a(i, j) = d.at(i, j);
    return a;
}

// ---------------------------------------------------------------------------
// L-BFGS with backtracking line search. The objective may be nonsmooth; the
// caller supplies a subgradient and the search simply insists on descent.
// ---------------------------------------------------------------------------

struct LbfgsOutcome {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    bool converged = false;
};

template <class Fn>
LbfgsOutcome lbfgs_minimize(Fn&& value_and_grad, std::vector<double> x0, int max_iterations,
                            double grad_tol, double obj_tol, int memory) {
    const std::size_t n = x0.size();
    std::vector<double> x = std::move(x0), g(n), x_new(n), g_new(n);
    double f = value_and_grad(x, g);

    std::vector<std::vector<double>> s_hist, y_hist;
    std::vector<double> rho_hist;

    LbfgsOutcome out;
    int flat_steps = 0;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        const double gnorm = std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
        if (std::sqrt(gnorm) <= grad_tol * std::max(1.0, std::fabs(f))) {
            out.converged = true;
            break;
        }

        // Two-loop recursion.
        std::vector<double> q = g;
        const int k = static_cast<int>(s_hist.size());
        std::vector<double> alpha_cache(k);
        for (int i = k - 1; i >= 0; --i) {
            double a = 0.0;
            for (std::size_t j = 0; j < n; ++j) a += s_hist[i][j] * q[j];
            a *= rho_hist[i];
            alpha_cache[i] = a;
            for (std::size_t j = 0; j < n; ++j) q[j] -= a * y_hist[i][j];
        }
        double h0 = 1.0;
        if (k > 0) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                sy += s_hist[k - 1][j] * y_hist[k - 1][j];
                yy += y_hist[k - 1][j] * y_hist[k - 1][j];
            }
            if (yy > 0.0) h0 = sy / yy;
        }
        for (double& qj : q) qj *= h0;
        for (int i = 0; i < k; ++i) {
            double b = 0.0;
            for (std::size_t j = 0; j < n; ++j) b += y_hist[i][j] * q[j];
            b *= rho_hist[i];
            for (std::size_t j = 0; j < n; ++j) q[j] += s_hist[i][j] * (alpha_cache[i] - b);
        }
        // q is the ascent correction; direction is -q.
        double dg = 0.0;
        for (std::size_t j = 0; j < n; ++j) dg += -q[j] * g[j];
        if (!(dg < 0.0)) {
            // Curvature info unusable (common right after a kink); fall back
            // to steepest descent.
            q = g;
            dg = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            if (dg == 0.0) {
                out.converged = true;
                break;
            }
        }

        double step = 1.0;
        double f_new = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t j = 0; j < n; ++j) x_new[j] = x[j] - step * q[j];
            f_new = value_and_grad(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * dg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // stalled on nonsmoothness; polish takes over

        if (std::fabs(f - f_new) <= obj_tol * std::max(1.0, std::fabs(f))) {
            ++flat_steps;
        } else {
            flat_steps = 0;
        }

        std::vector<double> s_vec(n), y_vec(n);
        double sy = 0.0, ss = 0.0, yy = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s_vec[j] = x_new[j] - x[j];
            y_vec[j] = g_new[j] - g[j];
            sy += s_vec[j] * y_vec[j];
            ss += s_vec[j] * s_vec[j];
            yy += y_vec[j] * y_vec[j];
        }
        if (sy > 1e-10 * std::sqrt(ss) * std::sqrt(yy)) {
            s_hist.push_back(std::move(s_vec));
            y_hist.push_back(std::move(y_vec));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }
        x.swap(x_new);
        g.swap(g_new);
        f = f_new;
        if (flat_steps >= 3) {
            out.converged = true;
            ++iter;
            break;
        }
    }
    out.x = std::move(x);
    out.f = f;
    out.iterations = iter;
    return out;
}

// 1-D minimization: expand a bracket downhill from x0, then golden-section.
template <class F1>
double line_minimize(F1&& f, double x0, double scale) {
    const double f0 = f(x0);
    double step = std::max(1e-9, 1e-3 * scale);
    double lo, hi;
    const double fl = f(x0 - step), fr = f(x0 + step);
    if (fl >= f0 && fr >= f0) {
        lo = x0 - step;
        hi = x0 + step;
    } else {
        const double dir = fr < fl ? 1.0 : -1.0;
        // Walk downhill with doubling steps; the minimum is bracketed by the
        // point before the best and the first non-improving point.
        double x_back = x0;
        double x_mid = x0 + dir * step;
        double f_mid = dir > 0 ? fr : fl;
        double x_end = x_mid;
        for (int i = 0; i < 80; ++i) {
            step *= 2.0;
            const double x_next = x_mid + dir * step;
            const double f_next = f(x_next);
            x_end = x_next;
            if (f_next >= f_mid) break;
            x_back = x_mid;
            x_mid = x_next;
            f_mid = f_next;
        }
        lo = std::min(x_back, x_end);
        hi = std::max(x_back, x_end);
    }
    constexpr double kGolden = 0.3819660112501051;
    double a = lo, b = hi;
    double m1 = a + kGolden * (b - a), m2 = b - kGolden * (b - a);
    double fm1 = f(m1), fm2 = f(m2);
    for (int i = 0; i < 120 && (b - a) > 1e-12 * std::max(1.0, scale); ++i) {
        if (fm1 <= fm2) {
            b = m2;
            m2 = m1;
            fm2 = fm1;
            m1 = a + kGolden * (b - a);
            fm1 = f(m1);
        } else {
            a = m1;
            m1 = m2;
            fm1 = fm2;
            m2 = b - kGolden * (b - a);
            fm2 = f(m2);
        }
    }
    const double xm = fm1 <= fm2 ? m1 : m2;
    const double fxm = std::min(fm1, fm2);
    return fxm < f0 ? xm : x0;
}

double softplus_scaled(double u, double tau) {
    if (tau <= 0.0) return u > 0.0 ? u : 0.0;
    const double t = u / tau;
    if (t > 40.0) return u;
    if (t < -40.0) return 0.0;
    return tau * std::log1p(std::exp(t));
}

double softplus_grad(double u, double tau) {
    if (tau <= 0.0) return u > 0.0 ? 1.0 : 0.0;
    const double t = u / tau;
    if (t > 40.0) return 1.0;
    if (t < -40.0) return 0.0;
    return 1.0 / (1.0 + std::exp(-t));
}

// Shared CVaR objective over an explicit row set: theta = [coef..., alpha].
struct HingeRiskProblem {
    const Dataset* data = nullptr;
    const DesignMatrix* design = nullptr;
    std::span<const int> active_rows;
    const ProfitSpec* spec = nullptr;
    double inv_denominator = 0.0; // 1/m for tailored risk, 1/((1-beta)s) for SAA-style
    double tau = 0.0;

    double value_and_grad(std::span<const double> theta, std::span<double> grad) const {
        const int k = design->cols;
        const double alpha = theta[k];
        std::fill(grad.begin(), grad.end(), 0.0);
        double acc = 0.0;
        for (int t : active_rows) {
            double x = 0.0;
            const auto row = design->row(t);
            for (int j = 0; j < k; ++j) x += row[j] * theta[j];
            const bool clamped = x < 0.0;
            if (clamped) x = 0.0;
            const double u = loss(*spec, x, data->demand[t]) - alpha;
            acc += softplus_scaled(u, tau);
            const double w = softplus_grad(u, tau);
            if (w > 0.0) {
                grad[k] -= w;
                if (!clamped) {
                    const double dl = loss_deriv_x(*spec, x, data->demand[t]);
                    for (int j = 0; j < k; ++j) grad[j] += w * dl * row[j];
                }
            }
        }
        for (int j = 0; j <= k; ++j) grad[j] *= inv_denominator;
        grad[k] += 1.0;
        return alpha + acc * inv_denominator;
    }

    double value(std::span<const double> theta) const {
        const int k = design->cols;
        const double alpha = theta[k];
        double acc = 0.0;
        for (int t : active_rows) {
            double x = 0.0;
            const auto row = design->row(t);
            for (int j = 0; j < k; ++j) x += row[j] * theta[j];
            if (x < 0.0) x = 0.0;
            const double u = loss(*spec, x, data->demand[t]) - alpha;
            if (u > 0.0) acc += u;
        }
        return alpha + acc * inv_denominator;
    }

    std::vector<double> losses_at(std::span<const double> theta) const {
        const int k = design->cols;
        std::vector<double> out;
        out.reserve(active_rows.size());
        for (int t : active_rows) {
            double x = 0.0;
            const auto row = design->row(t);
            for (int j = 0; j < k; ++j) x += row[j] * theta[j];
            if (x < 0.0) x = 0.0;
            out.push_back(loss(*spec, x, data->demand[t]));
        }
        return out;
    }
};

// Exact minimizer over alpha at fixed coefficients: the left endpoint of the
// flat segment, i.e. the order statistic leaving exactly `exceed` rows above.
double exact_alpha(std::vector<double> losses, int exceed) {
    const int n = static_cast<int>(losses.size());
    if (exceed >= n) return *std::min_element(losses.begin(), losses.end());
    std::nth_element(losses.begin(), losses.begin() + (n - exceed - 1), losses.end());
    return losses[n - exceed - 1];
}

// Cyclic coordinate descent on the exact (tau = 0) objective. Each gamma
// coordinate gets a golden-section line search; alpha gets its exact order
// statistic. Guarantees no single +/- coordinate move improves the objective,
// which is the stationarity contract the estimates are checked against.
void coordinate_polish(const HingeRiskProblem& prob, std::vector<double>& theta, int alpha_exceed,
                       double obj_tol, int max_sweeps = 40) {
    const int k = static_cast<int>(theta.size()) - 1;
    double f = prob.value(theta);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const double f_before = f;
        for (int j = 0; j < k; ++j) {
            const double scale = std::max(1.0, std::fabs(theta[j]));
            std::vector<double> probe(theta.begin(), theta.end());
            const double best = line_minimize(
                [&](double v) {
                    probe[j] = v;
                    return prob.value(probe);
                },
                theta[j], scale);
            probe[j] = best;
            const double fb = prob.value(probe);
            if (fb < f) {
                theta[j] = best;
                f = fb;
            }
        }
        const double snapped = exact_alpha(prob.losses_at(theta), alpha_exceed);
        std::vector<double> probe(theta.begin(), theta.end());
        probe[k] = snapped;
        const double fs = prob.value(probe);
        if (fs < f) {
            theta[k] = snapped;
            f = fs;
        }
        const double scale_a = std::max(1.0, std::fabs(theta[k]));
        const double best_a = line_minimize(
            [&](double v) {
                probe.assign(theta.begin(), theta.end());
                probe[k] = v;
                return prob.value(probe);
            },
            theta[k], scale_a);
        probe.assign(theta.begin(), theta.end());
        probe[k] = best_a;
        const double fa = prob.value(probe);
        if (fa < f) {
            theta[k] = best_a;
            f = fa;
        }
        if (f_before - f <= obj_tol * std::max(1.0, std::fabs(f_before))) break;
    }
}

struct MultiStartResult {
    std::vector<double> theta;
    double value = std::numeric_limits<double>::infinity();
    double initial_objective = 0.0;
    int iterations = 0;
    bool converged = false;
    int restarts_used = 0;
};

// Multi-start driver shared by the tailored and SAA solvers. Restarts run
// concurrently; the winner is chosen by (objective, restart index) so the
// outcome is independent of scheduling.
MultiStartResult multi_start(const HingeRiskProblem& prob, const std::vector<double>& theta0,
                             int alpha_exceed, const SolveConfig& cfg,
                             const std::vector<double>& perturb_scale) {
    const std::size_t dim = theta0.size();
    const int restarts = std::max(1, cfg.restarts);
    std::vector<std::vector<double>> results(restarts);
    std::vector<double> values(restarts, std::numeric_limits<double>::infinity());
    std::vector<int> iters(restarts, 0);
    std::vector<char> conv(restarts, 0);

    kernels::parallel_for(restarts, [&](long long r) {
        std::vector<double> start = theta0;
        if (r > 0) {
            rng::Stream stream(cfg.seed, "restart", static_cast<std::uint64_t>(r));
            for (std::size_t j = 0; j + 1 < dim; ++j)
                start[j] += perturb_scale[j] * stream.normal();
        }
        // Re-derive the threshold for the perturbed coefficients.
        start[dim - 1] = exact_alpha(prob.losses_at(start), alpha_exceed);

        const double tau_r =
            cfg.hinge_temperature > 0.0 ? cfg.hinge_temperature * std::pow(0.5, double(r)) : 0.0;
        HingeRiskProblem local = prob;
        local.tau = tau_r;

        LbfgsOutcome run = lbfgs_minimize(
            [&](const std::vector<double>& x, std::vector<double>& g) {
                return local.value_and_grad(x, g);
            },
            start, cfg.max_iterations, cfg.gradient_tolerance, cfg.objective_tolerance,
            cfg.lbfgs_memory);

        std::vector<double> theta = std::move(run.x);
        coordinate_polish(prob, theta, alpha_exceed, cfg.objective_tolerance);
        results[r] = std::move(theta);
        values[r] = prob.value(results[r]);
        iters[r] = run.iterations;
        conv[r] = run.converged ? 1 : 0;
    });

    MultiStartResult out;
    out.restarts_used = restarts;
    int best = -1;
    for (int r = 0; r < restarts; ++r) {
        if (std::isfinite(values[r]) && values[r] < out.value) {
            out.value = values[r];
            best = r;
        }
    }
    if (best < 0)
        throw std::runtime_error("optimizer: objective non-finite at every start");
    out.theta = results[best];
    out.iterations = iters[best];
    out.converged = conv[best] != 0;
    return out;
}

} // namespace

double npc_objective(const Dataset& data, const SelectionResult& sel, const ProfitSpec& spec,
                     const DesignMatrix& design, std::span<const double> theta) {
    HingeRiskProblem prob;
    prob.data = &data;
    prob.design = &design;
    prob.active_rows = sel.selected;
    prob.spec = &spec;
    prob.inv_denominator = 1.0 / static_cast<double>(sel.m);
    return prob.value(theta);
}

RiskEstimate minimize_npc(const Dataset& data, const SelectionResult& sel,
                          const ProfitSpec& spec, double beta, const SolveConfig& cfg,
                          std::span<const int> feature_subset, bool intercept) {
    if (sel.selected.empty() || sel.m < 1)
        throw std::invalid_argument("minimize_npc: empty selection");
    if (sel.beta != beta)
        throw std::invalid_argument("minimize_npc: selection built for a different beta");
    for (int t : sel.selected)
        if (t < 0 || t >= data.rows())
            throw std::invalid_argument("minimize_npc: selection does not match dataset");

    const DesignMatrix design = DesignMatrix::from_dataset(data, feature_subset, intercept);
    const int k = design.cols;

    HingeRiskProblem prob;
    prob.data = &data;
    prob.design = &design;
    prob.active_rows = sel.selected;
    prob.spec = &spec;
    prob.inv_denominator = 1.0 / static_cast<double>(sel.m);

    // OLS warm start on the selected rows (they are what the objective sees);
    // fall back to the full window, then to a flat mean rule.
    std::vector<double> gamma0;
    {
        std::vector<int> sub(sel.selected.begin(), sel.selected.end());
        DesignMatrix sub_design;
        sub_design.rows = static_cast<int>(sub.size());
        sub_design.cols = k;
        sub_design.names = design.names;
        sub_design.intercept = design.intercept;
        std::vector<double> sub_y;
        for (int t : sub) {
            const auto row = design.row(t);
            sub_design.values.insert(sub_design.values.end(), row.begin(), row.end());
            sub_y.push_back(data.demand[t]);
        }
        try {
            gamma0 = least_squares(sub_design, sub_y).coef;
        } catch (const std::exception&) {
            try {
                gamma0 = least_squares(design, data.demand).coef;
            } catch (const std::exception&) {
                gamma0.assign(k, 0.0);
                if (intercept) {
                    double mu = 0.0;
                    for (double d : data.demand) mu += d;
                    gamma0[0] = mu / std::max(1, data.rows());
                }
            }
        }
    }

    std::vector<double> theta0(gamma0);
    theta0.push_back(0.0);
    theta0.back() = exact_alpha(prob.losses_at(theta0), sel.m);

    double coef_scale = 0.0;
    for (double c : gamma0) coef_scale += std::fabs(c);
    coef_scale = std::max(coef_scale / std::max<std::size_t>(1, gamma0.size()), 1e-2);
    std::vector<double> perturb(gamma0.size());
    for (std::size_t j = 0; j < gamma0.size(); ++j)
        perturb[j] = 0.1 * std::max(std::fabs(gamma0[j]), 0.1 * coef_scale);

    const double f0 = prob.value(theta0);
    MultiStartResult best = multi_start(prob, theta0, sel.m, cfg, perturb);

    RiskEstimate est;
    est.hypothesis.coef.assign(best.theta.begin(), best.theta.end() - 1);
    est.hypothesis.intercept = intercept;
    est.alpha = best.theta.back();
    est.cvar_value = best.value;
    est.initial_objective = f0;
    est.restarts_used = best.restarts_used;
    est.iterations = best.iterations;
    est.converged = best.converged;

    ClampStats stats;
    double exceed = 0.0;
    for (int t : sel.selected) {
        double x = est.hypothesis.predict(data.row(t));
        if (x < 0.0) {
            x = 0.0;
            ++stats.clamped;
        }
        if (loss(spec, x, data.demand[t]) > est.alpha) ++exceed;
    }
    est.exceedance_count = static_cast<int>(exceed);
    est.clamped = stats.clamped;
    return est;
}

SaaResult minimize_saa(std::span<const double> demand_history, const ProfitSpec& spec,
                       double beta, const SolveConfig& cfg) {
    if (demand_history.empty())
        throw std::invalid_argument("minimize_saa: empty demand history");
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("minimize_saa: beta outside [0,1)");
    const int s = static_cast<int>(demand_history.size());

    // Wrap the scalar decision as a one-column constant design so the solver
    // machinery is shared with the feature-based path.
    Dataset ds;
    ds.feature_names = {"one"};
    ds.features.assign(s, 1.0);
    ds.demand.assign(demand_history.begin(), demand_history.end());

    DesignMatrix design;
    design.rows = s;
    design.cols = 1;
    design.names = {"one"};
    design.values.assign(s, 1.0);

    std::vector<int> all(s);
    std::iota(all.begin(), all.end(), 0);

    HingeRiskProblem prob;
    prob.data = &ds;
    prob.design = &design;
    prob.active_rows = all;
    prob.spec = &spec;
    prob.inv_denominator = 1.0 / ((1.0 - beta) * static_cast<double>(s));

    const int exceed = tail_count(beta, s);
    double mu = 0.0, sd = 0.0;
    for (double d : demand_history) mu += d;
    mu /= s;
    for (double d : demand_history) sd += (d - mu) * (d - mu);
    sd = std::sqrt(sd / std::max(1, s - 1));

    std::vector<double> theta0{mu, 0.0};
    theta0[1] = exact_alpha(prob.losses_at(theta0), exceed);
    std::vector<double> perturb{std::max(0.1 * sd, 0.01 * std::max(1.0, std::fabs(mu)))};

    MultiStartResult best = multi_start(prob, theta0, exceed, cfg, perturb);
    SaaResult res;
    res.order = std::max(0.0, best.theta[0]);
    res.alpha = best.theta[1];
    res.cvar_value = best.value;
    res.converged = best.converged;
    return res;
}

Hypothesis least_squares(const DesignMatrix& design, std::span<const double> y) {
    if (design.rows < design.cols)
        throw std::invalid_argument("least_squares: need rows >= columns");
    if (static_cast<int>(y.size()) != design.rows)
        throw std::invalid_argument("least_squares: target length mismatch");
    const MatrixXd a = to_eigen(design);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    if (qr.rank() < design.cols) {
        const auto perm = qr.colsPermutation().indices();
        std::ostringstream oss;
        oss << "least_squares: rank-deficient design; dependent column(s):";
        for (int i = qr.rank(); i < design.cols; ++i) oss << " " << design.names[perm[i]];
        throw std::invalid_argument(oss.str());
    }
    const VectorXd b = Eigen::Map<const VectorXd>(y.data(), y.size());
    const VectorXd sol = qr.solve(b);
    Hypothesis h;
    h.coef.assign(sol.data(), sol.data() + sol.size());
    h.intercept = design.intercept;
    return h;
}

std::vector<double> residuals(const DesignMatrix& design, std::span<const double> y,
                              const Hypothesis& h) {
    std::vector<double> r(design.rows);
    for (int i = 0; i < design.rows; ++i) {
        double yhat = 0.0;
        const auto row = design.row(i);
        for (int j = 0; j < design.cols; ++j) yhat += row[j] * h.coef[j];
        r[i] = y[i] - yhat;
    }
    return r;
}

double pinball_objective(const DesignMatrix& design, std::span<const double> y, double tau,
                         const Hypothesis& h) {
    double acc = 0.0;
    for (int i = 0; i < design.rows; ++i) {
        double yhat = 0.0;
        const auto row = design.row(i);
        for (int j = 0; j < design.cols; ++j) yhat += row[j] * h.coef[j];
        const double u = y[i] - yhat;
        acc += u * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return acc / static_cast<double>(design.rows);
}

namespace {

// Exact coordinate update for the pinball objective: the one-dimensional
// problem is piecewise linear with breakpoints where a residual crosses zero;
// scan them in order and stop at the first non-negative right-slope. Flat
// optima resolve to the left endpoint.
bool pinball_coordinate_update(const DesignMatrix& design, std::span<const double> y, double tau,
                               std::vector<double>& coef, int j, std::vector<double>& yhat) {
    struct Item {
        double b;
        double w;
    };
    std::vector<Item> items;
    items.reserve(design.rows);
    double base_slope = 0.0;
    for (int i = 0; i < design.rows; ++i) {
        const double z = design.at(i, j);
        if (z == 0.0) continue;
        const double a = y[i] - yhat[i] + z * coef[j];
        items.push_back({a / z, std::fabs(z)});
        base_slope += -tau * z + (z < 0.0 ? z : 0.0);
    }
    if (items.empty()) return false;
    std::sort(items.begin(), items.end(), [](const Item& u, const Item& v) { return u.b < v.b; });
    double slope = base_slope;
    double candidate = items.back().b;
    for (const Item& it : items) {
        slope += it.w;
        if (slope >= 0.0) {
            candidate = it.b;
            break;
        }
    }
    if (candidate == coef[j]) return false;
    const double delta = candidate - coef[j];
    coef[j] = candidate;
    for (int i = 0; i < design.rows; ++i) yhat[i] += delta * design.at(i, j);
    return true;
}

} // namespace

Hypothesis quantile_regression(const DesignMatrix& design, std::span<const double> y, double tau,
                               const SolveConfig& cfg) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("quantile_regression: tau must lie in (0,1)");
    if (design.rows <= design.cols)
        throw std::invalid_argument("quantile_regression: need rows > columns");

    Hypothesis h = least_squares(design, y); // also screens degenerate columns
    const MatrixXd a = to_eigen(design);
    const VectorXd b = Eigen::Map<const VectorXd>(y.data(), y.size());

    // IRLS with interior damping: approximate |r| by max(|r|, delta) and let
    // delta shrink as the iterate settles.
    VectorXd coef = Eigen::Map<const VectorXd>(h.coef.data(), h.coef.size());
    double delta = 0.0;
    {
        const VectorXd r = b - a * coef;
        delta = std::max(1e-6, 0.1 * r.cwiseAbs().mean());
    }
    for (int it = 0; it < 60; ++it) {
        const VectorXd r = b - a * coef;
        VectorXd w(design.rows);
        for (int i = 0; i < design.rows; ++i) {
            const double weight = r[i] < 0.0 ? 1.0 - tau : tau;
            w[i] = weight / std::max(std::fabs(r[i]), delta);
        }
        const MatrixXd aw = w.cwiseSqrt().asDiagonal() * a;
        const VectorXd bw = w.cwiseSqrt().asDiagonal() * b;
        Eigen::ColPivHouseholderQR<MatrixXd> qr(aw);
        const VectorXd next = qr.solve(bw);
        if (!next.allFinite()) break;
        const double move = (next - coef).cwiseAbs().maxCoeff();
        coef = next;
        if (it % 5 == 4) delta = std::max(delta * 0.1, 1e-10);
        if (move < 1e-10 && delta <= 1e-9) break;
    }
    if (!coef.allFinite()) coef = Eigen::Map<const VectorXd>(h.coef.data(), h.coef.size());

    std::vector<double> c(coef.data(), coef.data() + coef.size());
    std::vector<double> yhat(design.rows, 0.0);
    for (int i = 0; i < design.rows; ++i) {
        double v = 0.0;
        for (int j = 0; j < design.cols; ++j) v += design.at(i, j) * c[j];
        yhat[i] = v;
    }

    // Exact coordinate sweeps both finish the solve and certify it: the loop
    // only exits once no coordinate move improves the objective.
    Hypothesis out;
    out.intercept = design.intercept;
    out.coef = c;
    double f = pinball_objective(design, y, tau, out);
    for (int sweep = 0; sweep < 200; ++sweep) {
        bool moved = false;
        for (int j = 0; j < design.cols; ++j)
            moved |= pinball_coordinate_update(design, y, tau, c, j, yhat);
        out.coef = c;
        const double f_new = pinball_objective(design, y, tau, out);
        if (!moved || f - f_new <= cfg.objective_tolerance * std::max(1.0, std::fabs(f))) {
            f = std::min(f, f_new);
            break;
        }
        f = f_new;
    }
    out.coef = std::move(c);
    return out;
}

StationarityReport check_coordinate_stationarity(
    const std::function<double(std::span<const double>)>& objective,
    std::span<const double> point, double tolerance, double step_scale) {
    StationarityReport rep;
    rep.worst_directional_derivative = std::numeric_limits<double>::infinity();
    std::vector<double> probe(point.begin(), point.end());
    const double f0 = objective(point);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double h = step_scale * std::max(1.0, std::fabs(probe[i]));
        for (double sign : {1.0, -1.0}) {
            const double saved = probe[i];
            probe[i] = saved + sign * h;
            const double fd = (objective(probe) - f0) / h;
            probe[i] = saved;
            if (fd < rep.worst_directional_derivative) {
                rep.worst_directional_derivative = fd;
                rep.worst_coordinate = static_cast<int>(i);
            }
        }
    }
    rep.stationary = rep.worst_directional_derivative >= -tolerance;
    return rep;
}

} // namespace nvcvar
