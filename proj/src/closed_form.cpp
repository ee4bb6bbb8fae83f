#include "nvcvar/closed_form.hpp"

#include "nvcvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nvcvar {

namespace {

double quantile_from_sorted(std::span<const double> sorted, double p, QuantileRule rule) {
    const std::size_t n = sorted.size();
    if (rule == QuantileRule::Interpolated) {
        // R type 7: h = (n-1)p.
        const double h = (static_cast<double>(n) - 1.0) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        if (lo + 1 >= n) return sorted[n - 1];
        const double w = h - static_cast<double>(lo);
        return sorted[lo] + w * (sorted[lo + 1] - sorted[lo]);
    }
    // inf{eta : F(eta) >= p} with F the empirical CDF: the k-th order
    // statistic with k = ceil(p*n), clamped to [1, n].
    double kd = std::ceil(p * static_cast<double>(n));
    if (kd < 1.0) kd = 1.0;
    if (kd > static_cast<double>(n)) kd = static_cast<double>(n);
    return sorted[static_cast<std::size_t>(kd) - 1];
}

} // namespace

double empirical_inverse_cdf(std::span<const double> samples, double p, QuantileRule rule) {
    if (samples.empty())
        throw std::invalid_argument("empirical_inverse_cdf: empty sample");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("empirical_inverse_cdf: p outside [0,1]");
    if (std::is_sorted(samples.begin(), samples.end()))
        return quantile_from_sorted(samples, p, rule);
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_from_sorted(sorted, p, rule);
}

InverseCdf InverseCdf::normal(double mu, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("InverseCdf::normal: sigma must be > 0");
    InverseCdf f;
    f.kind_ = Kind::Normal;
    f.mu_ = mu;
    f.sigma_ = sigma;
    return f;
}

InverseCdf InverseCdf::empirical(std::vector<double> samples, QuantileRule rule) {
    if (samples.empty()) throw std::invalid_argument("InverseCdf::empirical: empty sample");
    std::sort(samples.begin(), samples.end());
    InverseCdf f;
    f.kind_ = Kind::Empirical;
    f.sorted_ = std::move(samples);
    f.rule_ = rule;
    return f;
}

InverseCdf InverseCdf::user_grid(std::vector<double> probs, std::vector<double> quantiles) {
    if (probs.size() < 2 || probs.size() != quantiles.size())
        throw std::invalid_argument("InverseCdf::user_grid: need >= 2 aligned points");
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (!(probs[i] > probs[i - 1]) || quantiles[i] < quantiles[i - 1])
            throw std::invalid_argument("InverseCdf::user_grid: grid must be monotone");
    InverseCdf f;
    f.kind_ = Kind::UserGrid;
    f.grid_p_ = std::move(probs);
    f.grid_q_ = std::move(quantiles);
    return f;
}

double InverseCdf::operator()(double p) const {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("InverseCdf: p outside [0,1]");
    switch (kind_) {
        case Kind::Normal:
            return mu_ + sigma_ * stats::normal_inv_cdf(p);
        case Kind::Empirical:
            return quantile_from_sorted(sorted_, p, rule_);
        case Kind::UserGrid: {
            if (p <= grid_p_.front()) return grid_q_.front();
            if (p >= grid_p_.back()) return grid_q_.back();
            const auto it = std::upper_bound(grid_p_.begin(), grid_p_.end(), p);
            const std::size_t hi = static_cast<std::size_t>(it - grid_p_.begin());
            const std::size_t lo = hi - 1;
            const double w = (p - grid_p_[lo]) / (grid_p_[hi] - grid_p_[lo]);
            return grid_q_[lo] + w * (grid_q_[hi] - grid_q_[lo]);
        }
    }
    return 0.0;
}

double classic_quantile_level(const LinearParams& p) {
    const double e = p.overage();
    const double u = p.underage();
    if (!(e + u > 0.0))
        throw std::invalid_argument("classic_quantile_level: E + U must be positive");
    return u / (e + u);
}

QuantileMixture cvar_quantile_mixture(const Eq8Params& p, double beta) {
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("cvar_quantile_mixture: beta outside [0,1)");
    const double e = p.overage, u = p.underage, w = p.margin;
    const double denom = e + u;
    if (!(denom > 0.0))
        throw std::invalid_argument("cvar_quantile_mixture: E + U must be positive");
    QuantileMixture m;
    m.level_low = u * (1.0 - beta) / denom;
    m.level_high = (e * beta + u) / denom;
    m.weight_low = (e + w) / denom;
    m.weight_high = (u - w) / denom;
    if (!(m.level_low >= 0.0 && m.level_low <= 1.0) ||
        !(m.level_high >= 0.0 && m.level_high <= 1.0))
        throw std::invalid_argument("cvar_quantile_mixture: quantile level outside [0,1]");
    return m;
}

double cvar_order_quantity(const Eq8Params& p, double beta, const InverseCdf& inv_cdf) {
    const QuantileMixture m = cvar_quantile_mixture(p, beta);
    return m.weight_low * inv_cdf(m.level_low) + m.weight_high * inv_cdf(m.level_high);
}

double cvar_order_quantity(const LinearParams& p, double beta, const InverseCdf& inv_cdf) {
    return cvar_order_quantity(Eq8Params{p.overage(), p.underage(), p.margin()}, beta, inv_cdf);
}

} // namespace nvcvar
