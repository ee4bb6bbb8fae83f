#include "nvcvar/adaptive_selection.hpp"

#include "nvcvar/optimizer.hpp"
#include "nvcvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace nvcvar {

Decomposition make_given_decomposition(const Dataset& data, std::vector<double> systematic) {
    if (static_cast<int>(systematic.size()) != data.rows())
        throw std::invalid_argument("make_given_decomposition: length mismatch");
    Decomposition dec;
    dec.mode = Decomposition::Mode::Given;
    dec.systematic = std::move(systematic);
    dec.irregular.resize(dec.systematic.size());
    for (int t = 0; t < data.rows(); ++t)
        dec.irregular[t] = data.demand[t] - dec.systematic[t];
    return dec;
}

Decomposition decompose(const Dataset& data, std::span<const int> feature_subset,
                        Decomposition::Mode mode, bool intercept) {
    if (mode == Decomposition::Mode::Given) {
        // Given mode with no explicit components: the generator's truth.
        if (!data.eps_truth)
            throw std::invalid_argument(
                "decompose: Given mode needs ground-truth residuals or an explicit split");
        Decomposition dec;
        dec.mode = Decomposition::Mode::Given;
        dec.irregular = *data.eps_truth;
        dec.systematic.resize(dec.irregular.size());
        for (int t = 0; t < data.rows(); ++t)
            dec.systematic[t] = data.demand[t] - dec.irregular[t];
        return dec;
    }

    const DesignMatrix design = DesignMatrix::from_dataset(data, feature_subset, intercept);
    if (data.rows() <= design.cols)
        throw std::invalid_argument("decompose: pilot fit needs more rows than columns");
    const Hypothesis fit = least_squares(design, data.demand);

    Decomposition dec;
    dec.mode = Decomposition::Mode::PilotLeastSquares;
    dec.systematic.resize(data.rows());
    dec.irregular.resize(data.rows());
    for (int t = 0; t < data.rows(); ++t) {
        double yhat = 0.0;
        for (int j = 0; j < design.cols; ++j) yhat += design.at(t, j) * fit.coef[j];
        dec.systematic[t] = yhat;
        dec.irregular[t] = data.demand[t] - yhat;
    }
    return dec;
}

SelectionResult select_extremes(const Decomposition& dec, double beta) {
    const int s = static_cast<int>(dec.irregular.size());
    if (s < 2) throw std::invalid_argument("select_extremes: need at least 2 rows");
    if (!(beta > 0.5 && beta < 1.0))
        throw std::invalid_argument("select_extremes: beta must lie in (0.5, 1)");
    const int m = tail_count(beta, s);
    if (2 * m > s)
        throw std::invalid_argument("select_extremes: beta too small for sample size");

    std::vector<int> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return dec.irregular[a] < dec.irregular[b]; });

    SelectionResult sel;
    sel.m = m;
    sel.beta = beta;
    sel.lower.assign(order.begin(), order.begin() + m);
    sel.upper.assign(order.end() - m, order.end());
    sel.selected = sel.lower;
    sel.selected.insert(sel.selected.end(), sel.upper.begin(), sel.upper.end());
    std::sort(sel.selected.begin(), sel.selected.end());
    sel.eps_selected.reserve(2 * m);
    for (int i : sel.lower) sel.eps_selected.push_back(dec.irregular[i]);
    for (int i : sel.upper) sel.eps_selected.push_back(dec.irregular[i]);

    auto near = [&](int a, int b) {
        const double scale =
            std::max({1.0, std::fabs(dec.irregular[a]), std::fabs(dec.irregular[b])});
        return std::fabs(dec.irregular[a] - dec.irregular[b]) <= 1e-12 * scale;
    };
    sel.tie_warning = (m < s && near(order[m - 1], order[m])) ||
                      (s - m - 1 >= 0 && near(order[s - m], order[s - m - 1]));
    return sel;
}

double tailored_risk(const Hypothesis& h, double alpha, const Dataset& data,
                     const SelectionResult& sel, const ProfitSpec& spec, double beta,
                     ClampStats* stats) {
    if (sel.m < 1 || sel.selected.empty())
        throw std::invalid_argument("tailored_risk: empty selection");
    if (sel.beta != beta)
        throw std::invalid_argument("tailored_risk: selection built for a different beta");
    long clamped = 0;
    double acc = 0.0;
    for (int t : sel.selected) {
        if (t < 0 || t >= data.rows())
            throw std::invalid_argument("tailored_risk: selection does not match dataset");
        double x = h.predict(data.row(t));
        if (x < 0.0) {
            x = 0.0;
            ++clamped;
        }
        const double excess = loss(spec, x, data.demand[t]) - alpha;
        if (excess > 0.0) acc += excess;
    }
    if (stats) stats->clamped += clamped;
    return alpha + acc / static_cast<double>(sel.m);
}

SubsetReport verify_subset_property(const Dataset& data, const SelectionResult& sel,
                                    const Hypothesis& h, const ProfitSpec& spec, double beta) {
    SubsetReport rep;
    const std::vector<double> losses = pointwise_losses(h, data, spec);
    const VarResult var = discrete_var(losses, beta);
    rep.alpha = var.alpha;
    rep.m = var.m;
    rep.exceedance = var.exceedance;
    rep.selected = sel.selected;

    for (int idx : rep.exceedance)
        if (!std::binary_search(rep.selected.begin(), rep.selected.end(), idx))
            rep.violations.push_back(idx);
    rep.holds = rep.violations.empty();

    // Tail probe at a representative order level and demand level, so a
    // violation can be attributed to a broken tail assumption.
    double x_typ = 0.0, t_typ = 0.0;
    for (int t = 0; t < data.rows(); ++t) {
        x_typ += std::max(0.0, h.predict(data.row(t)));
        t_typ += data.demand[t];
    }
    x_typ /= std::max(1, data.rows());
    t_typ /= std::max(1, data.rows());
    const TailProbe probe =
        probe_tail_monotonicity(spec, x_typ, t_typ, std::max(1e4, 10.0 * std::fabs(t_typ)));
    rep.tail_assumption_ok = probe.ok();
    return rep;
}

void export_selection_csv(const std::string& path, const Decomposition& dec,
                          const SelectionResult& sel, const Metadata& meta) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "# nvcvar selection v1\n";
    for (const auto& [k, v] : meta) out << "# " << k << "=" << v << "\n";
    out << "index,residual,tail\n";
    std::vector<char> tag(dec.irregular.size(), '.');
    for (int i : sel.lower) tag[i] = 'L';
    for (int i : sel.upper) tag[i] = 'U';
    for (std::size_t t = 0; t < dec.irregular.size(); ++t) {
        const char* name = tag[t] == 'L' ? "lower" : tag[t] == 'U' ? "upper" : "mid";
        out << t << "," << format_double(dec.irregular[t]) << "," << name << "\n";
    }
}

ResidualDiagnostics residual_diagnostics(const Decomposition& dec, int lags) {
    ResidualDiagnostics diag;
    diag.lags = lags;
    diag.acf.resize(lags);
    for (int k = 1; k <= lags; ++k)
        diag.acf[k - 1] = stats::sample_autocorrelation(dec.irregular, k);
    diag.ljung_box_q = stats::ljung_box_q(dec.irregular, lags);
    return diag;
}

} // namespace nvcvar
