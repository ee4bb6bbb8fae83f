#pragma once

#include "nvcvar/core_model.hpp"

#include <span>
#include <vector>

namespace nvcvar {

/// Quantile convention for sample-based inverse CDFs. LeftContinuous is the
/// generalized inverse inf{eta : F(eta) >= p} and is the default everywhere;
/// Interpolated is the mainstream linear-interpolation rule (R type 7), kept
/// behind this flag for parity checks against statistics tools.
enum class QuantileRule { LeftContinuous, Interpolated };

/// Left-continuous empirical quantile of `samples` at level p in [0,1].
double empirical_inverse_cdf(std::span<const double> samples, double p,
                             QuantileRule rule = QuantileRule::LeftContinuous);

/// Inverse demand CDF: a normal, an empirical sample, or a user grid of
/// (probability, quantile) pairs for anything heavier-tailed.
class InverseCdf {
public:
    static InverseCdf normal(double mu, double sigma);
    static InverseCdf empirical(std::vector<double> samples,
                                QuantileRule rule = QuantileRule::LeftContinuous);
    static InverseCdf user_grid(std::vector<double> probs, std::vector<double> quantiles);

    double operator()(double p) const;

private:
    InverseCdf() = default;
    enum class Kind { Normal, Empirical, UserGrid } kind_ = Kind::Normal;
    double mu_ = 0.0, sigma_ = 1.0;
    std::vector<double> sorted_;
    std::vector<double> grid_p_, grid_q_;
    QuantileRule rule_ = QuantileRule::LeftContinuous;
};

/// Critical ratio U/(E+U) of the classic expected-profit-maximizing order.
double classic_quantile_level(const LinearParams& p);

/// The two quantile levels and mixture weights of the closed-form
/// CVaR-minimizing order quantity.
struct QuantileMixture {
    double level_low = 0.0;   // U(1-beta)/(E+U)
    double level_high = 0.0;  // (E*beta+U)/(E+U)
    double weight_low = 0.0;  // (E+W)/(E+U)
    double weight_high = 0.0; // (U-W)/(E+U)
};

QuantileMixture cvar_quantile_mixture(const Eq8Params& p, double beta);

/// CVaR-minimizing order quantity for a known demand distribution: the
/// two-quantile mixture evaluated through F^{-1}. When the shortage cost is
/// zero the high-quantile weight vanishes and this collapses to the single
/// low quantile; at beta = 0 it collapses to the classic critical ratio.
double cvar_order_quantity(const Eq8Params& p, double beta, const InverseCdf& inv_cdf);
double cvar_order_quantity(const LinearParams& p, double beta, const InverseCdf& inv_cdf);

} // namespace nvcvar
