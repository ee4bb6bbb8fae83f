#include "nvcvar/datagen.hpp"

#include "nvcvar/kernels.hpp"
#include "nvcvar/rng.hpp"
#include "nvcvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nvcvar {

std::vector<ArimaSpec> baseline_feature_specs(double innovation_sigma) {
    // Published baseline table, one row per feature:
    //   feature 1: theta_{1,1}=0.3, theta_{12,1}=0.5
    //   feature 2: theta_{1,1}=0.2, phi_{1,1}=0.5, theta_{12,1}=0.1
    //   feature 3: theta_{1,1}=0.3, phi_{1,1}=0.2, phi_{12,1}=0.1
    //   feature 4: phi_{1,1}=0.1, phi_{1,2}=0.2, theta_{12,1}=0.1, theta_{12,2}=0.1
    std::vector<ArimaSpec> specs(4);
    specs[0].ma1 = 0.3;
    specs[0].sma12 = 0.5;
    specs[1].ma1 = 0.2;
    specs[1].ar1 = 0.5;
    specs[1].sma12 = 0.1;
    specs[2].ma1 = 0.3;
    specs[2].ar1 = 0.2;
    specs[2].sar12 = 0.1;
    specs[3].ar1 = 0.1;
    specs[3].ar2 = 0.2;
    specs[3].sma12 = 0.1;
    specs[3].sma24 = 0.1;
    for (auto& s : specs) s.innovation_sigma = innovation_sigma;
    return specs;
}

ErrorSpec ErrorSpec::mixture(const std::array<double, 3>& weights) {
    ErrorSpec e;
    e.kind = Kind::Mixture;
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("ErrorSpec: weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("ErrorSpec: weights must not all vanish");
    for (int i = 0; i < 3; ++i) e.weights[i] = weights[i] / total;
    return e;
}

ErrorSpec ErrorSpec::normal(double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("ErrorSpec: sigma must be >= 0");
    ErrorSpec e;
    e.kind = Kind::Normal;
    e.normal_sigma = sigma;
    return e;
}

ErrorSpec ErrorSpec::student_t(double scale, int nu) {
    if (!(scale > 0.0) || nu < 1) throw std::invalid_argument("ErrorSpec: bad t parameters");
    ErrorSpec e;
    e.kind = Kind::StudentT;
    e.t_scale = scale;
    e.t_nu = nu;
    return e;
}

double error_cdf(const ErrorSpec& err, double x) {
    switch (err.kind) {
        case ErrorSpec::Kind::Normal:
            if (err.normal_sigma == 0.0) return x >= 0.0 ? 1.0 : 0.0;
            return stats::normal_cdf(x / err.normal_sigma);
        case ErrorSpec::Kind::StudentT:
            return stats::student_t_cdf(x / err.t_scale, err.t_nu);
        case ErrorSpec::Kind::Mixture:
            return err.weights[0] * stats::normal_cdf(x / err.normal_sigma) +
                   err.weights[1] * stats::laplace_cdf(x, 0.0, err.laplace_b) +
                   err.weights[2] * stats::student_t_cdf(x / err.t_scale, err.t_nu);
    }
    return 0.0;
}

double error_quantile(const ErrorSpec& err, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0 || p == 1.0)
            throw std::invalid_argument("error_quantile: p must lie strictly inside (0,1)");
        throw std::invalid_argument("error_quantile: p outside [0,1]");
    }
    switch (err.kind) {
        case ErrorSpec::Kind::Normal:
            if (err.normal_sigma == 0.0) return 0.0;
            return err.normal_sigma * stats::normal_inv_cdf(p);
        default:
            break;
    }
    // Bracketed bisection on the CDF; scale from the widest component.
    double hi = 8.0 * std::max({err.normal_sigma, err.laplace_b, err.t_scale, 1.0});
    double lo = -hi;
    for (int i = 0; i < 200 && error_cdf(err, lo) > p; ++i) lo *= 2.0;
    for (int i = 0; i < 200 && error_cdf(err, hi) < p; ++i) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (error_cdf(err, mid) < p) lo = mid;
        else hi = mid;
        if (hi - lo <= 1e-12 * std::max(1.0, std::fabs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double error_sample(const ErrorSpec& err, rng::Stream& stream) {
    switch (err.kind) {
        case ErrorSpec::Kind::Normal:
            return err.normal_sigma == 0.0 ? 0.0 : stream.normal(0.0, err.normal_sigma);
        case ErrorSpec::Kind::StudentT:
            return stream.student_t(err.t_nu, err.t_scale);
        case ErrorSpec::Kind::Mixture: {
            const double u = stream.uniform();
            if (u < err.weights[0]) return stream.normal(0.0, err.normal_sigma);
            if (u < err.weights[0] + err.weights[1]) return stream.laplace(0.0, err.laplace_b);
            return stream.student_t(err.t_nu, err.t_scale);
        }
    }
    return 0.0;
}

namespace {

std::vector<double> simulate_feature(const ArimaSpec& spec, int s, rng::Stream& stream) {
    constexpr int kMaxLag = 24;
    const int total = spec.burn_in + s;
    if (spec.burn_in < kMaxLag)
        throw std::invalid_argument("ArimaSpec: burn-in must cover the longest lag (24)");
    std::vector<double> z(total, 0.0), a(total, 0.0);
    double peak = 0.0;
    for (int t = 0; t < total; ++t) {
        a[t] = stream.normal(0.0, spec.innovation_sigma);
        double v = a[t];
        if (t >= 1) v += spec.ar1 * z[t - 1] + spec.ma1 * a[t - 1];
        if (t >= 2) v += spec.ar2 * z[t - 2];
        if (t >= 12) v += spec.sar12 * z[t - 12] + spec.sma12 * a[t - 12];
        if (t >= 24) v += spec.sma24 * a[t - 24];
        z[t] = v;
        peak = std::max(peak, std::fabs(v));
        // Stationarity probe: reject once the series has clearly blown up.
        if (peak > 1e7 * std::max(spec.innovation_sigma, 1e-12))
            throw std::invalid_argument("ArimaSpec: explosive process rejected by probe");
    }
    return {z.begin() + spec.burn_in, z.end()};
}

} // namespace

std::vector<double> gen_features(std::span<const ArimaSpec> specs, int s, std::uint64_t seed) {
    if (s < 1) throw std::invalid_argument("gen_features: s must be >= 1");
    const int p = static_cast<int>(specs.size());
    std::vector<double> out(static_cast<std::size_t>(s) * p);
    std::vector<std::vector<double>> cols(p);
    std::string err_msg;
    kernels::parallel_for(p, [&](long long j) {
        try {
            rng::Stream stream(seed, "feature", static_cast<std::uint64_t>(j));
            cols[j] = simulate_feature(specs[j], s, stream);
        } catch (const std::exception& e) {
            err_msg = e.what();
        }
    });
    if (!err_msg.empty()) throw std::invalid_argument(err_msg);
    for (int t = 0; t < s; ++t)
        for (int j = 0; j < p; ++j) out[static_cast<std::size_t>(t) * p + j] = cols[j][t];
    return out;
}

Dataset gen_demand(const GenConfig& cfg, std::span<const double> features,
                   const ErrorSpec& err, std::uint64_t seed) {
    if (cfg.s < 1) throw std::invalid_argument("gen_demand: s must be >= 1");
    if (static_cast<int>(cfg.coefficients.size()) != cfg.p + 1)
        throw std::invalid_argument("gen_demand: coefficient vector must have p+1 entries");
    if (features.size() != static_cast<std::size_t>(cfg.s) * cfg.p)
        throw std::invalid_argument("gen_demand: feature matrix dimension mismatch");

    Dataset ds;
    for (int j = 0; j < cfg.p; ++j) ds.feature_names.push_back("z" + std::to_string(j + 1));
    ds.features.assign(features.begin(), features.end());
    ds.demand.resize(cfg.s);
    ds.eps_truth = std::vector<double>(cfg.s);

    rng::Stream stream(seed, "demand-error");
    for (int t = 0; t < cfg.s; ++t) {
        double level = cfg.coefficients[0];
        for (int j = 0; j < cfg.p; ++j)
            level += cfg.coefficients[j + 1] * features[static_cast<std::size_t>(t) * cfg.p + j];
        const double r = error_sample(err, stream);
        ds.demand[t] = level + r;
        (*ds.eps_truth)[t] = r;
    }
    return ds;
}

std::array<double, 3> mixture_weights(std::uint64_t seed) {
    rng::Stream stream(seed, "mixture-weights");
    return rng::dirichlet3(stream);
}

BaselineResult generate_baseline(const BaselineOptions& opt) {
    BaselineResult res;
    res.error_used = opt.error;
    if (opt.draw_mixture_weights && opt.error.kind == ErrorSpec::Kind::Mixture) {
        res.weights = mixture_weights(opt.seed);
        res.error_used = ErrorSpec::mixture(res.weights);
    } else {
        res.weights = res.error_used.weights;
    }
    const auto specs = baseline_feature_specs(opt.feature_innovation_sigma);
    const auto features = gen_features(specs, opt.s, opt.seed);
    GenConfig cfg;
    cfg.s = opt.s;
    cfg.seed = opt.seed;
    res.data = gen_demand(cfg, features, res.error_used, opt.seed);
    return res;
}

Dataset foodbank_fixture(std::uint64_t seed, int weeks) {
    if (weeks < 2) throw std::invalid_argument("foodbank_fixture: need at least 2 weeks");
    rng::Stream stream(seed, "foodbank");
    Dataset ds;
    ds.feature_names = kFoodBankFeatureNames;
    const int p = static_cast<int>(kFoodBankFeatureNames.size());
    ds.features.resize(static_cast<std::size_t>(weeks) * p);
    ds.demand.resize(weeks);
    ds.eps_truth = std::vector<double>(weeks);

    // Slowly drifting macro indicators, weekly local counts, dummies, and a
    // visit count driven mainly by unemployment, covid cases and season.
    double inflation = 6.0, unemployment = 4.0, econ = 100.0, index_close = 7200.0;
    for (int t = 0; t < weeks; ++t) {
        inflation += stream.normal(0.0, 0.15);
        unemployment += stream.normal(0.0, 0.08);
        econ += stream.normal(0.0, 0.8);
        index_close += stream.normal(0.0, 60.0);
        const double births = std::max(0.0, 95.0 + stream.normal(0.0, 8.0));
        const double deaths = std::max(0.0, 88.0 + stream.normal(0.0, 7.0));
        const double covid = std::max(0.0, 900.0 + 500.0 * std::sin(2.0 * M_PI * t / 52.0) +
                                               stream.normal(0.0, 120.0));
        const double crime = std::max(0.0, 55.0 + stream.normal(0.0, 4.0));
        const double holiday = stream.uniform() < 0.12 ? 1.0 : 0.0;
        const double winter = (t % 52 >= 10 && t % 52 < 30) ? 1.0 : 0.0;

        const double zrow[] = {inflation, unemployment, econ,  index_close, births,
                               deaths,    covid,        crime, holiday,     winter};
        for (int j = 0; j < p; ++j) ds.features[static_cast<std::size_t>(t) * p + j] = zrow[j];

        const double eps = stream.normal(0.0, 6.0);
        double visits = 60.0 + 9.0 * unemployment + 0.02 * covid - 12.0 * winter +
                        4.0 * holiday + eps;
        visits = std::max(0.0, std::round(visits));
        ds.demand[t] = visits;
        (*ds.eps_truth)[t] = eps;
    }
    return ds;
}

} // namespace nvcvar
