#include "nvcvar/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nvcvar {

namespace {

constexpr int kW = 760;
constexpr int kH = 420;
constexpr int kPad = 52;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Canvas {
    std::ostringstream body;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

    double px(double x) const { return kPad + (x - x_min) / (x_max - x_min) * (kW - 2 * kPad); }
    double py(double y) const {
        return kH - kPad - (y - y_min) / (y_max - y_min) * (kH - 2 * kPad);
    }

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, bool dashed = false) {
        body << "<line x1='" << px(x1) << "' y1='" << py(y1) << "' x2='" << px(x2) << "' y2='"
             << py(y2) << "' stroke='" << color << "' stroke-width='" << width << "'";
        if (dashed) body << " stroke-dasharray='6,4'";
        body << "/>\n";
    }
    void rect_raw(double x, double y, double w, double h, const std::string& fill,
                  double opacity = 1.0) {
        body << "<rect x='" << x << "' y='" << y << "' width='" << w << "' height='" << h
             << "' fill='" << fill << "' fill-opacity='" << opacity << "'/>\n";
    }
    void circle(double x, double y, double r, const std::string& color) {
        body << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='" << r << "' fill='"
             << color << "'/>\n";
    }
    void text_raw(double x, double y, const std::string& s, int size = 12,
                  const std::string& anchor = "start") {
        body << "<text x='" << x << "' y='" << y << "' font-size='" << size
             << "' font-family='sans-serif' text-anchor='" << anchor << "'>" << s << "</text>\n";
    }
    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color) {
        body << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < xs.size(); ++i)
            body << px(xs[i]) << "," << py(ys[i]) << " ";
        body << "'/>\n";
    }
    void axes(const std::string& xlabel, const std::string& ylabel) {
        line(x_min, y_min, x_max, y_min, "#000", 1.0);
        line(x_min, y_min, x_min, y_max, "#000", 1.0);
        text_raw(kW / 2.0, kH - 10, xlabel, 12, "middle");
        body << "<text x='14' y='" << kH / 2.0
             << "' font-size='12' font-family='sans-serif' text-anchor='middle' "
                "transform='rotate(-90 14 "
             << kH / 2.0 << ")'>" << ylabel << "</text>\n";
    }
};

void flush(const std::string& path, const Canvas& canvas, const std::string& title,
           const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW << "' height='" << kH
        << "'>\n";
    if (!config_hash.empty()) out << "<!-- config_hash=" << config_hash << " -->\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<text x='" << kW / 2.0
        << "' y='22' font-size='14' font-family='sans-serif' text-anchor='middle'>" << title
        << "</text>\n";
    out << canvas.body.str();
    out << "</svg>\n";
}

} // namespace

void write_loss_histogram_svg(const std::string& path, const BacktestReport& report,
                              const std::string& config_hash) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const MethodRun& run : report.methods)
        for (const IterationRow& r : run.rows)
            if (!r.failed) {
                lo = std::min(lo, r.loss);
                hi = std::max(hi, r.loss);
            }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    const int bins = 40;
    const double bw = (hi - lo) / bins;

    Canvas cv;
    cv.x_min = lo;
    cv.x_max = hi;
    cv.y_min = 0.0;
    double peak = 1.0;
    std::vector<std::vector<int>> counts(report.methods.size(), std::vector<int>(bins, 0));
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        for (const IterationRow& r : report.methods[m].rows) {
            if (r.failed) continue;
            int b = static_cast<int>((r.loss - lo) / bw);
            b = std::clamp(b, 0, bins - 1);
            peak = std::max(peak, static_cast<double>(++counts[m][b]));
        }
    }
    cv.y_max = peak * 1.1;

    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        const std::string color = kPalette[m % 8];
        for (int b = 0; b < bins; ++b) {
            if (!counts[m][b]) continue;
            const double x0 = cv.px(lo + b * bw);
            const double x1 = cv.px(lo + (b + 1) * bw);
            const double y0 = cv.py(counts[m][b]);
            cv.rect_raw(x0, y0, x1 - x0, cv.py(0) - y0, color, 0.35);
        }
        cv.line(report.methods[m].downside_loss, cv.y_min, report.methods[m].downside_loss,
                cv.y_max, color, 1.5, true);
        cv.text_raw(kPad + 8, kPad + 16 * (m + 1),
                    report.methods[m].spec.display_name() + "  DL=" +
                        format_double(report.methods[m].downside_loss),
                    11);
    }
    cv.axes("loss", "count");
    flush(path, cv, "per-iteration loss histogram (dashed: downside loss)", config_hash);
}

void write_series_svg(const std::string& path, const BacktestReport& report,
                      const std::string& method_label, const std::string& config_hash) {
    const MethodRun* target = nullptr;
    for (const MethodRun& run : report.methods)
        if (run.spec.display_name() == method_label) target = &run;
    if (!target && !report.methods.empty()) target = &report.methods.front();
    if (!target) throw DataError("write_series_svg: empty report");

    std::vector<double> xs, orders, demands;
    for (std::size_t i = 0; i < target->rows.size(); ++i) {
        if (target->rows[i].failed) continue;
        xs.push_back(static_cast<double>(i + 1));
        orders.push_back(target->rows[i].order);
        demands.push_back(target->rows[i].demand);
    }
    Canvas cv;
    cv.x_min = 1;
    cv.x_max = std::max<double>(2.0, xs.empty() ? 2.0 : xs.back());
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : orders) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : demands) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    cv.y_min = lo - 0.05 * (hi - lo);
    cv.y_max = hi + 0.05 * (hi - lo);
    cv.polyline(xs, demands, kPalette[0]);
    cv.polyline(xs, orders, kPalette[1]);
    cv.text_raw(kPad + 8, kPad + 16, "demand", 11);
    cv.text_raw(kPad + 8, kPad + 32, target->spec.display_name() + " order", 11);
    cv.axes("iteration", "units");
    flush(path, cv, "demand vs. order (" + target->spec.display_name() + ")", config_hash);
}

void write_selection_scatter_svg(const std::string& path, const Decomposition& dec,
                                 const SelectionResult& sel, const SubsetReport& subset,
                                 const std::string& config_hash) {
    Canvas cv;
    const int s = static_cast<int>(dec.irregular.size());
    cv.x_min = 0;
    cv.x_max = std::max(1, s - 1);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double e : dec.irregular) {
        lo = std::min(lo, e);
        hi = std::max(hi, e);
    }
    cv.y_min = lo - 0.05 * (hi - lo);
    cv.y_max = hi + 0.05 * (hi - lo);

    // Selection band edges: the largest unselected residual gap on each side.
    if (!sel.eps_selected.empty()) {
        const double lower_edge = sel.eps_selected[sel.m - 1];
        const double upper_edge = sel.eps_selected[sel.m];
        cv.line(cv.x_min, lower_edge, cv.x_max, lower_edge, "#444", 1.0, true);
        cv.line(cv.x_min, upper_edge, cv.x_max, upper_edge, "#444", 1.0, true);
    }
    std::vector<char> in_m(s, 0), in_s(s, 0);
    for (int i : sel.selected) in_m[i] = 1;
    for (int i : subset.exceedance) in_s[i] = 1;
    for (int t = 0; t < s; ++t) {
        const char* color = in_s[t] ? "#d62728" : (in_m[t] ? "#1f77b4" : "#bbbbbb");
        if (in_s[t]) {
            // shaded halo for exceedance rows
            cv.circle(t, dec.irregular[t], 6.0, "#f7c8c8");
        }
        cv.circle(t, dec.irregular[t], 2.5, color);
    }
    cv.text_raw(kPad + 8, kPad + 16, "red: exceedance set S (shaded)", 11);
    cv.text_raw(kPad + 8, kPad + 32, "blue: selected set M, dashed: selection band", 11);
    cv.text_raw(kPad + 8, kPad + 48,
                std::string("S subset of M: ") + (subset.holds ? "yes" : "NO"), 11);
    cv.axes("row index", "irregular component");
    flush(path, cv, "adaptive selection scatter", config_hash);
}

} // namespace nvcvar
