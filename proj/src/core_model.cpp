#include "nvcvar/core_model.hpp"

#include "nvcvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nvcvar {

namespace {

void validate(const LinearParams& p) {
    if (!(p.r > p.c) || !(p.c >= 0.0))
        throw std::invalid_argument("LinearParams: requires r > c >= 0");
    if (!(p.c > -p.v))
        throw std::invalid_argument("LinearParams: requires c > -v");
    if (!std::isfinite(p.r) || !std::isfinite(p.c) || !std::isfinite(p.v) || !std::isfinite(p.g))
        throw std::invalid_argument("LinearParams: parameters must be finite");
}

double pos(double t) { return t > 0.0 ? t : 0.0; }

double custom_table_value(const CustomTable& tb, double u) {
    const auto& xs = tb.gap;
    const auto& ys = tb.value;
    const std::size_t n = xs.size();
    if (u <= xs.front()) {
        const double slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return ys[0] + slope * (u - xs[0]);
    }
    if (u >= xs.back()) {
        const double slope = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        return ys[n - 1] + slope * (u - xs[n - 1]);
    }
    const auto it = std::upper_bound(xs.begin(), xs.end(), u);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (u - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + w * (ys[hi] - ys[lo]);
}

double custom_table_slope(const CustomTable& tb, double u) {
    const auto& xs = tb.gap;
    const auto& ys = tb.value;
    const std::size_t n = xs.size();
    std::size_t hi;
    if (u <= xs.front()) hi = 1;
    else if (u >= xs.back()) hi = n - 1;
    else hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), u) - xs.begin());
    return (ys[hi] - ys[hi - 1]) / (xs[hi] - xs[hi - 1]);
}

} // namespace

LinearParams LinearParams::costs(double r, double c, double v, double g) {
    LinearParams p{r, c, v, g};
    validate(p);
    return p;
}

LinearParams LinearParams::profit_terms(double r, double c, double v_term, double g_term) {
    return costs(r, c, -v_term, -g_term);
}

CustomTable make_custom_table(std::vector<double> gap, std::vector<double> value) {
    if (gap.size() < 2 || gap.size() != value.size())
        throw std::invalid_argument("CustomTable: need >= 2 aligned grid points");
    for (std::size_t i = 1; i < gap.size(); ++i)
        if (!(gap[i] > gap[i - 1]))
            throw std::invalid_argument("CustomTable: gap grid must be strictly increasing");

    CustomTable tb{std::move(gap), std::move(value), true};
    // Tail check over the outer 25% of the grid on each side: at least one
    // tail must be monotone outward AND actually growing (a flat bounded tail
    // does not diverge). A table failing both is flagged, not rejected.
    const std::size_t n = tb.gap.size();
    const std::size_t k = std::max<std::size_t>(2, n / 4);
    bool left = true, right = true;
    for (std::size_t i = 1; i < k; ++i)
        if (tb.value[i] > tb.value[i - 1] + 1e-12) left = false;
    for (std::size_t i = n - k + 1; i < n; ++i)
        if (tb.value[i] < tb.value[i - 1] - 1e-12) right = false;
    const double tol = 1e-9 * std::max(1.0, std::fabs(tb.value[0]) + std::fabs(tb.value[n - 1]));
    left = left && (tb.value[0] - tb.value[k - 1] > tol);
    right = right && (tb.value[n - 1] - tb.value[n - k] > tol);
    tb.tail_monotone_ok = left || right;
    return tb;
}

double linear_profit(const LinearParams& p, double x, double d) {
    return p.r * std::min(x, d) - p.c * x - p.v * pos(x - d) - p.g * pos(d - x);
}

double expected_min_normal(double a, double mu, double sigma) {
    if (sigma <= 0.0) return std::min(a, mu);
    const double z = (a - mu) / sigma;
    return a * (1.0 - stats::normal_cdf(z)) + mu * stats::normal_cdf(z) -
           sigma * stats::normal_pdf(z);
}

double expected_min_uniform(double a, double lo, double hi) {
    if (a <= lo) return a;
    if (a >= hi) return 0.5 * (lo + hi);
    // int_lo^a u/(hi-lo) du + a * (hi-a)/(hi-lo)
    const double w = hi - lo;
    return (a * a - lo * lo) / (2.0 * w) + a * (hi - a) / w;
}

double profit(const ProfitSpec& spec, double x, double d) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearParams>) {
                return linear_profit(s, x, d);
            } else if constexpr (std::is_same_v<T, NonlinearSalvageQuad>) {
                const double over = pos(x - d);
                const double under = pos(d - x);
                return s.r * std::min(x, d) - s.c * x - s.v * over +
                       s.salvage_price * expected_min_normal(over, s.salvage_mu, s.salvage_sigma) -
                       s.quad_shortage * under * under;
            } else if constexpr (std::is_same_v<T, NonlinearQuadShortage>) {
                const double under = pos(d - x);
                return s.r * std::min(x, d) - s.c * x - s.v * pos(x - d) -
                       s.quad_shortage * under * under;
            } else if constexpr (std::is_same_v<T, NonlinearUniformSalvage>) {
                const double over = pos(x - d);
                return s.r * std::min(x, d) - s.c * x +
                       s.salvage_price * expected_min_uniform(over, s.salvage_lo, s.salvage_hi);
            } else if constexpr (std::is_same_v<T, FoodBankLoss>) {
                return -loss(spec, x, d);
            } else {
                return -loss(spec, x, d);
            }
        },
        spec);
}

double loss(const ProfitSpec& spec, double x, double d) {
    if (const auto* fb = std::get_if<FoodBankLoss>(&spec)) {
        const double over = pos(x - d);
        const double under = pos(d - x);
        return fb->eta * over + fb->zeta * under * under;
    }
    if (const auto* tb = std::get_if<CustomTable>(&spec)) {
        return custom_table_value(*tb, d - x);
    }
    return -profit(spec, x, d);
}

double loss_deriv_x(const ProfitSpec& spec, double x, double d) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearParams>) {
                return x > d ? s.overage() : -s.underage();
            } else if constexpr (std::is_same_v<T, NonlinearSalvageQuad>) {
                if (x > d) {
                    const double z = (x - d - s.salvage_mu) / s.salvage_sigma;
                    // d/da E[min{a,u}] = 1 - Phi(z)
                    return s.c + s.v - s.salvage_price * (1.0 - stats::normal_cdf(z));
                }
                return -(s.r - s.c) - 2.0 * s.quad_shortage * (d - x);
            } else if constexpr (std::is_same_v<T, NonlinearQuadShortage>) {
                if (x > d) return s.c + s.v;
                return -(s.r - s.c) - 2.0 * s.quad_shortage * (d - x);
            } else if constexpr (std::is_same_v<T, NonlinearUniformSalvage>) {
                if (x > d) {
                    const double a = x - d;
                    double frac; // P(u > a)
                    if (a <= s.salvage_lo) frac = 1.0;
                    else if (a >= s.salvage_hi) frac = 0.0;
                    else frac = (s.salvage_hi - a) / (s.salvage_hi - s.salvage_lo);
                    return s.c - s.salvage_price * frac;
                }
                return -(s.r - s.c);
            } else if constexpr (std::is_same_v<T, FoodBankLoss>) {
                if (x > d) return s.eta;
                return -2.0 * s.zeta * (d - x);
            } else {
                return -custom_table_slope(s, d - x);
            }
        },
        spec);
}

Eq8Params eq8_params(const ProfitSpec& spec) {
    return std::visit(
        [](const auto& s) -> Eq8Params {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearParams>) {
                return {s.overage(), s.underage(), s.margin()};
            } else if constexpr (std::is_same_v<T, NonlinearSalvageQuad>) {
                return {s.c + s.v, s.r - s.c, s.r - s.c};
            } else if constexpr (std::is_same_v<T, NonlinearQuadShortage>) {
                return {s.c + s.v, s.r - s.c, s.r - s.c};
            } else if constexpr (std::is_same_v<T, NonlinearUniformSalvage>) {
                return {s.c, s.r - s.c, s.r - s.c};
            } else if constexpr (std::is_same_v<T, FoodBankLoss>) {
                return {s.eta, s.eta, 0.0};
            } else {
                // No per-unit economics to read off a sampled table.
                return {1.0, 1.0, 0.0};
            }
        },
        spec);
}

TailProbe probe_tail_monotonicity(const ProfitSpec& spec, double x, double t_level,
                                  double radius, int steps) {
    TailProbe probe;

    {
        const double start = t_level + 0.25 * radius;
        const double h = 0.75 * radius / steps;
        bool monotone = true;
        const double first = loss(spec, x, start);
        double prev = first;
        for (int i = 1; i <= steps; ++i) {
            const double cur = loss(spec, x, start + i * h);
            if (cur < prev - 1e-9 * std::max(1.0, std::fabs(prev))) {
                monotone = false;
                break;
            }
            prev = cur;
        }
        probe.right_growth = prev - first;
        probe.right_ok =
            monotone && probe.right_growth > 1e-9 * std::max(1.0, std::fabs(first));
    }

    {
        // Walk from 0.75*t_level down to (almost) zero demand; the left tail
        // is truncated by the demand floor.
        const double start = 0.75 * t_level;
        const double h = start / steps;
        bool monotone = true;
        const double first = loss(spec, x, start);
        double prev = first;
        for (int i = 1; i <= steps; ++i) {
            const double cur = loss(spec, x, std::max(0.0, start - i * h));
            if (cur < prev - 1e-9 * std::max(1.0, std::fabs(prev))) {
                monotone = false;
                break;
            }
            prev = cur;
        }
        probe.left_growth = prev - first;
        probe.left_ok = monotone && probe.left_growth > 1e-9 * std::max(1.0, std::fabs(first));
    }
    return probe;
}

std::string spec_name(const ProfitSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, LinearParams>) return "linear";
            else if constexpr (std::is_same_v<T, NonlinearSalvageQuad>) return "nonlinear0";
            else if constexpr (std::is_same_v<T, NonlinearQuadShortage>) return "nonlinear1";
            else if constexpr (std::is_same_v<T, NonlinearUniformSalvage>) return "nonlinear2";
            else if constexpr (std::is_same_v<T, FoodBankLoss>) return "foodbank";
            else return "custom";
        },
        spec);
}

} // namespace nvcvar
