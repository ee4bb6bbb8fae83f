#include "nvcvar/cvar_objective.hpp"

#include "nvcvar/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nvcvar {

int tail_count(double beta, int s) {
    const double v = (1.0 - beta) * static_cast<double>(s);
    const int m = static_cast<int>(std::ceil(v - 1e-9 * std::max(1.0, v)));
    return std::max(1, m);
}

double Hypothesis::predict(std::span<const double> z) const {
    std::size_t k = 0;
    double acc = 0.0;
    if (intercept) acc = coef[k++];
    if (z.size() != coef.size() - k)
        throw std::invalid_argument("Hypothesis::predict: feature dimension mismatch");
    for (std::size_t j = 0; j < z.size(); ++j) acc += coef[k + j] * z[j];
    return acc;
}

VarResult discrete_var(std::span<const double> losses, double beta) {
    const int s = static_cast<int>(losses.size());
    if (s < 2) throw std::invalid_argument("discrete_var: need at least 2 losses");
    if (!(beta > 0.5 && beta < 1.0))
        throw std::invalid_argument("discrete_var: beta must lie in (0.5, 1)");
    const int m = tail_count(beta, s);
    if (m >= s) throw std::invalid_argument("discrete_var: tail covers the whole sample");

    std::vector<int> order(losses.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return losses[a] < losses[b]; });

    VarResult res;
    res.m = m;
    res.alpha = losses[order[s - m - 1]];
    res.exceedance.assign(order.begin() + (s - m), order.end());
    std::sort(res.exceedance.begin(), res.exceedance.end());

    const double boundary = losses[order[s - m]];
    const double scale = std::max({1.0, std::fabs(res.alpha), std::fabs(boundary)});
    res.tie_warning = std::fabs(boundary - res.alpha) <= 1e-12 * scale;
    return res;
}

double ru_function(std::span<const double> losses, double alpha, double beta) {
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("ru_function: beta outside [0,1)");
    if (losses.empty()) throw std::invalid_argument("ru_function: empty loss sample");
    const double denom = (1.0 - beta) * static_cast<double>(losses.size());
    return alpha + kernels::hinge_excess_sum(losses, alpha) / denom;
}

double ru_function_serial(std::span<const double> losses, double alpha, double beta) {
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("ru_function: beta outside [0,1)");
    if (losses.empty()) throw std::invalid_argument("ru_function: empty loss sample");
    const double denom = (1.0 - beta) * static_cast<double>(losses.size());
    return alpha + kernels::hinge_excess_sum_serial(losses, alpha) / denom;
}

double cvar_from_losses(std::span<const double> losses, double beta) {
    if (losses.empty()) throw std::invalid_argument("cvar_from_losses: empty loss sample");
    if (!(beta >= 0.0 && beta < 1.0))
        throw std::invalid_argument("cvar_from_losses: beta outside [0,1)");
    // The objective is convex piecewise-linear in alpha with breakpoints at
    // the sample values; the minimizer sits at the ceil((1-beta)s)-th largest
    // loss (any point of the flat segment when (1-beta)s is integral).
    std::vector<double> sorted(losses.begin(), losses.end());
    std::sort(sorted.begin(), sorted.end());
    const int s = static_cast<int>(sorted.size());
    const int m = tail_count(beta, s);
    const double alpha = sorted[s - m];
    return ru_function_serial(sorted, alpha, beta);
}

std::vector<double> pointwise_losses(const Hypothesis& h, const Dataset& data,
                                     const ProfitSpec& spec, ClampStats* stats) {
    std::vector<double> out(static_cast<std::size_t>(data.rows()));
    long clamped = 0;
    for (int t = 0; t < data.rows(); ++t) {
        double x = h.predict(data.row(t));
        if (x < 0.0) {
            x = 0.0;
            ++clamped;
        }
        out[static_cast<std::size_t>(t)] = loss(spec, x, data.demand[t]);
    }
    if (stats) stats->clamped += clamped;
    return out;
}

double empirical_feature_risk(const Hypothesis& h, const Dataset& data, const ProfitSpec& spec,
                              double alpha, double beta, ClampStats* stats) {
    if (data.rows() < 2)
        throw std::invalid_argument("empirical_feature_risk: need at least 2 rows");
    const std::vector<double> losses = pointwise_losses(h, data, spec, stats);
    return ru_function(losses, alpha, beta);
}

} // namespace nvcvar
