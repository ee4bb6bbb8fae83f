#pragma once

#include <string>
#include <variant>
#include <vector>

namespace nvcvar {

/// Unit economics of the linear newsvendor: revenue r per sold unit, purchase
/// cost c, disposal cost v per leftover unit, shortage cost g per unit of
/// unmet demand. v and g may be negative (salvage revenue, emergency backup).
/// Requires r > c >= 0 and c > -v.
struct LinearParams {
    double r = 0.0;
    double c = 0.0;
    double v = 0.0;
    double g = 0.0;

    /// Cost convention: profit = r*min{x,d} - c*x - v*[x-d]+ - g*[d-x]+.
    static LinearParams costs(double r, double c, double v, double g);

    /// As-written convention for profit functions displayed with explicit
    /// signs, profit = r*min{x,d} - c*x + v_term*[x-d]+ + g_term*[d-x]+;
    /// maps to the cost convention by flipping v and g.
    static LinearParams profit_terms(double r, double c, double v_term, double g_term);

    double overage() const { return c + v; }    // E
    double underage() const { return r - c + g; } // U
    double margin() const { return r - c; }       // W
};

/// Overage/underage/margin triple used by the closed-form order-quantity
/// mixture. Derived from LinearParams, or supplied directly for profit
/// specifications with no exact linear representation.
struct Eq8Params {
    double overage = 0.0;   // E
    double underage = 0.0;  // U
    double margin = 0.0;    // W
};

/// Nonlinear profit with normal salvage-market demand and quadratic shortage:
/// r*min{x,d} - c*x - v*[x-d]+ + salvage_price*E[min{[x-d]+, u}] - quad*([d-x]+)^2,
/// u ~ Normal(salvage_mu, salvage_sigma^2). The expectation is evaluated in
/// closed form.
struct NonlinearSalvageQuad {
    double r = 20.0;
    double c = 8.0;
    double v = 4.0;
    double salvage_price = 5.0;
    double salvage_mu = 30.0;
    double salvage_sigma = 5.0;
    double quad_shortage = 0.01;
};

/// r*min{x,d} - c*x - v*[x-d]+ - quad*([d-x]+)^2.
struct NonlinearQuadShortage {
    double r = 20.0;
    double c = 8.0;
    double v = 4.0;
    double quad_shortage = 0.01;
};

/// r*min{x,d} - c*x + salvage_price*E[min{[x-d]+, u}], u ~ Uniform(lo, hi).
struct NonlinearUniformSalvage {
    double r = 20.0;
    double c = 8.0;
    double salvage_price = 5.0;
    double salvage_lo = 0.0;
    double salvage_hi = 15.0;
};

/// Food-bank preparation loss: eta*[x-d]+ + zeta*([d-x]+)^2 (overage linear,
/// underage quadratic). eta, zeta >= 0.
struct FoodBankLoss {
    double eta = 15.0;
    double zeta = 1.0;
};

/// User loss sampled on a grid over the gap u = d - x, evaluated by linear
/// interpolation (linear extrapolation with the end slopes beyond the grid).
/// tail_monotone_ok records the construction-time tail probe; a false value
/// means the loss violates the monotone-tail requirement and adaptive
/// selection offers no subset guarantee for it.
struct CustomTable {
    std::vector<double> gap;
    std::vector<double> value;
    bool tail_monotone_ok = true;
};

CustomTable make_custom_table(std::vector<double> gap, std::vector<double> value);

using ProfitSpec = std::variant<LinearParams, NonlinearSalvageQuad, NonlinearQuadShortage,
                                NonlinearUniformSalvage, FoodBankLoss, CustomTable>;

struct DemandPoint {
    double order = 0.0;
    double demand = 0.0;
};

double linear_profit(const LinearParams& p, double x, double d);

/// Dispatches on the profit variant. FoodBankLoss and CustomTable are loss
/// specifications; their "profit" is minus the loss so the loss/profit
/// identity holds across all variants.
double profit(const ProfitSpec& spec, double x, double d);

double loss(const ProfitSpec& spec, double x, double d);

/// dL/dx at (x, d). One-sided at kinks: the hinge subgradient convention is
/// d[0]+ = 0, and the min{x,d} kink takes the x<d branch.
double loss_deriv_x(const ProfitSpec& spec, double x, double d);

/// E[min{a, u}] for u ~ Normal(mu, sigma^2):
/// a*(1 - Phi(z)) + mu*Phi(z) - sigma*phi(z), z = (a - mu)/sigma.
double expected_min_normal(double a, double mu, double sigma);

/// E[min{a, u}] for u ~ Uniform(lo, hi), exact piecewise form.
double expected_min_uniform(double a, double lo, double hi);

/// Best linear stand-in for the closed-form order-quantity mixture. Exact for
/// LinearParams; for the nonlinear forms it keeps the linear terms and drops
/// salvage-market and quadratic pieces; for FoodBankLoss it uses the
/// symmetric E = U = eta, W = 0 default (callers may override).
Eq8Params eq8_params(const ProfitSpec& spec);

struct TailProbe {
    bool left_ok = false;   // monotone AND growing as d walks from the pivot toward 0
    bool right_ok = false;  // monotone AND growing as d walks from the pivot outward
    double left_growth = 0.0;
    double right_growth = 0.0;
    bool ok() const { return left_ok || right_ok; }
};

/// Empirical check of the tail requirement: the loss, walked along a demand
/// grid away from the pivot level, must be monotone non-decreasing outward
/// and actually diverge (grow) on at least one side. The left walk covers
/// (0, 0.75*t_level], the right walk [t_level + radius/4, t_level + radius].
/// A bounded or oscillating tail fails the probe.
TailProbe probe_tail_monotonicity(const ProfitSpec& spec, double x, double t_level,
                                  double radius = 1e4, int steps = 400);

std::string spec_name(const ProfitSpec& spec);

} // namespace nvcvar
