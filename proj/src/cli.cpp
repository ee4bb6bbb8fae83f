#include "nvcvar/cli.hpp"

#include "nvcvar/adaptive_selection.hpp"
#include "nvcvar/closed_form.hpp"
#include "nvcvar/datagen.hpp"
#include "nvcvar/dataset.hpp"
#include "nvcvar/harness.hpp"
#include "nvcvar/kernels.hpp"
#include "nvcvar/svg.hpp"
#include "nvcvar/verification.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace nvcvar::cli {

namespace {

namespace fs = std::filesystem;

// Flat key=value configuration with [section] headers. CLI flags override
// file values; sections match subcommand names, the [common] section applies
// everywhere.
std::map<std::string, std::string> load_config(const std::string& path,
                                               const std::string& section) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config '" + path + "'");
    std::map<std::string, std::string> out;
    std::string line, current;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            current = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        const auto trim = [](std::string& s) {
            s.erase(0, s.find_first_not_of(" \t"));
            s.erase(s.find_last_not_of(" \t") + 1);
        };
        trim(key);
        trim(value);
        if (current.empty() || current == "common" || current == section) out[key] = value;
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

// "NPC@1-4" or "LM@9,10": method token with an optional 1-based feature range.
MethodSpec parse_method_token(const std::string& token) {
    MethodSpec spec;
    const auto at = token.find('@');
    const std::string name = token.substr(0, at);
    spec.method = method_from_name(name);
    if (at != std::string::npos) {
        spec.label = token;
        for (const std::string& part : split(token.substr(at + 1), ',')) {
            const auto dash = part.find('-');
            if (dash != std::string::npos) {
                const int lo = std::stoi(part.substr(0, dash));
                const int hi = std::stoi(part.substr(dash + 1));
                for (int j = lo; j <= hi; ++j) spec.features.push_back(j - 1);
            } else if (!part.empty()) {
                spec.features.push_back(std::stoi(part) - 1);
            }
        }
    }
    return spec;
}

ProfitSpec parse_profit(const std::string& name, const std::string& convention,
                        double eta, double zeta) {
    const bool as_written = convention == "as-written";
    if (name == "linear0")
        return as_written ? LinearParams::profit_terms(20.0, 8.0, 3.0, 7.0)
                          : LinearParams::costs(20.0, 8.0, 3.0, 7.0);
    if (name == "linear1") return LinearParams::costs(20.0, 8.0, 3.0, 7.0);
    if (name == "linear2")
        return as_written ? LinearParams::profit_terms(20.0, 8.0, 7.0, 3.0)
                          : LinearParams::costs(20.0, 8.0, 7.0, 3.0);
    if (name == "nonlinear0") return NonlinearSalvageQuad{};
    if (name == "nonlinear1") return NonlinearQuadShortage{};
    if (name == "nonlinear2") return NonlinearUniformSalvage{};
    if (name == "foodbank") return FoodBankLoss{eta, zeta};
    throw CLI::ValidationError("--profit", "unknown profit spec '" + name + "'");
}

ErrorSpec parse_error_spec(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts[0] == "normal")
        return ErrorSpec::normal(parts.size() > 1 ? std::stod(parts[1]) : 100.0);
    if (parts[0] == "student")
        return ErrorSpec::student_t(parts.size() > 1 ? std::stod(parts[1]) : 100.0,
                                    parts.size() > 2 ? std::stoi(parts[2]) : 5);
    if (parts[0] == "mixture") {
        if (parts.size() > 1) {
            const auto ws = split(parts[1], ',');
            if (ws.size() != 3)
                throw CLI::ValidationError("--error", "mixture needs three weights");
            return ErrorSpec::mixture({std::stod(ws[0]), std::stod(ws[1]), std::stod(ws[2])});
        }
        return ErrorSpec::mixture({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    }
    throw CLI::ValidationError("--error", "unknown error spec '" + text + "'");
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int threads = 0;
    bool plots = false;
};

std::string canonical_options(const std::map<std::string, std::string>& kv) {
    std::ostringstream oss;
    for (const auto& [k, v] : kv) oss << k << "=" << v << "\n";
    return oss.str();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec && !fs::exists(dir)) throw DataError("cannot create output directory '" + dir + "'");
}

Dataset load_any_dataset(const std::string& path, const std::string& schema) {
    if (schema == "foodbank") return read_foodbank_csv(path);
    return read_dataset_csv(path);
}

int cmd_generate(const CommonOpts& common, const std::string& schema, int s,
                 const std::string& error_text, double feature_sigma, bool fixed_weights) {
    ensure_dir(common.out_dir);
    Metadata meta;
    meta["seed"] = std::to_string(common.seed);
    meta["schema"] = schema;

    Dataset ds;
    if (schema == "foodbank") {
        ds = foodbank_fixture(common.seed, s);
        meta["weeks"] = std::to_string(s);
    } else {
        BaselineOptions opt;
        opt.s = s;
        opt.seed = common.seed;
        opt.feature_innovation_sigma = feature_sigma;
        opt.error = parse_error_spec(error_text);
        opt.draw_mixture_weights = !fixed_weights;
        const BaselineResult res = generate_baseline(opt);
        ds = std::move(res.data);
        meta["error"] = error_text;
        meta["feature_sigma"] = format_double(feature_sigma);
        meta["mixture_w_normal"] = format_double(res.weights[0]);
        meta["mixture_w_laplace"] = format_double(res.weights[1]);
        meta["mixture_w_student"] = format_double(res.weights[2]);
        meta["s"] = std::to_string(s);
    }
    meta["config_hash"] = config_hash(canonical_options(meta));
    write_dataset_csv(common.out_dir + "/dataset.csv", ds, meta);
    write_metadata(common.out_dir + "/dataset.meta", meta);
    std::cout << "wrote " << common.out_dir << "/dataset.csv (" << ds.rows() << " rows, "
              << ds.cols() << " features)\n";
    return 0;
}

int cmd_solve(const CommonOpts& common, const std::string& data_path, const std::string& schema,
              double beta, const std::string& profit_name, const std::string& convention,
              double eta, double zeta, const std::string& features_text) {
    ensure_dir(common.out_dir);
    const Dataset ds = load_any_dataset(data_path, schema);
    const ProfitSpec spec = parse_profit(profit_name, convention, eta, zeta);

    std::vector<int> subset;
    if (!features_text.empty()) {
        const MethodSpec m = parse_method_token("NPC@" + features_text);
        subset = m.features;
    }

    const Decomposition dec =
        decompose(ds, subset, Decomposition::Mode::PilotLeastSquares, true);
    const SelectionResult sel = select_extremes(dec, beta);
    SolveConfig cfg;
    cfg.seed = common.seed;
    const RiskEstimate est = minimize_npc(ds, sel, spec, beta, cfg, subset, true);
    const SubsetReport subset_rep = verify_subset_property(ds, sel, est.hypothesis, spec, beta);
    const ResidualDiagnostics diag = residual_diagnostics(dec);

    Metadata meta;
    meta["seed"] = std::to_string(common.seed);
    meta["beta"] = format_double(beta);
    meta["profit"] = profit_name;
    meta["data"] = data_path;
    const std::string hash = config_hash(canonical_options(meta));
    meta["config_hash"] = hash;

    nlohmann::json j;
    j["config_hash"] = hash;
    j["beta"] = beta;
    j["profit"] = profit_name;
    j["gamma"] = est.hypothesis.coef;
    j["intercept"] = est.hypothesis.intercept;
    j["columns"] = DesignMatrix::from_dataset(ds, subset, true).names;
    j["alpha"] = est.alpha;
    j["cvar_value"] = est.cvar_value;
    j["iterations"] = est.iterations;
    j["restarts_used"] = est.restarts_used;
    j["converged"] = est.converged;
    j["exceedance_count"] = est.exceedance_count;
    j["clamped"] = est.clamped;
    j["selected_rows"] = sel.selected.size();
    j["subset_property_holds"] = subset_rep.holds;
    j["residual_ljung_box_q"] = diag.ljung_box_q;
    std::ofstream out(common.out_dir + "/solve.json");
    out << j.dump(2) << "\n";

    export_selection_csv(common.out_dir + "/selection.csv", dec, sel, meta);
    if (common.plots)
        write_selection_scatter_svg(common.out_dir + "/selection.svg", dec, sel, subset_rep,
                                    hash);
    std::cout << "cvar=" << est.cvar_value << " alpha=" << est.alpha
              << " selected_rows=" << sel.selected.size() << "\n";
    return 0;
}

int cmd_backtest(const CommonOpts& common, const std::string& data_path,
                 const std::string& schema, double beta, int origin, int iterations,
                 const std::string& methods_text, const std::string& profit_name,
                 const std::string& convention, double eta, double zeta,
                 const std::string& um_error_text, double rmps_tau, bool serial) {
    ensure_dir(common.out_dir);
    const Dataset ds = load_any_dataset(data_path, schema);

    BacktestConfig cfg;
    cfg.origin = origin;
    cfg.iterations = iterations;
    cfg.beta = beta;
    cfg.seed = common.seed;
    cfg.spec = parse_profit(profit_name, convention, eta, zeta);
    cfg.parallel = !serial;
    cfg.rmps_tau = rmps_tau;

    std::optional<ErrorSpec> um_error;
    if (!um_error_text.empty()) um_error = parse_error_spec(um_error_text);
    for (const std::string& token : split(methods_text, ',')) {
        if (token.empty()) continue;
        MethodSpec m = parse_method_token(token);
        if (m.method == Method::UM) m.known_error = um_error;
        cfg.methods.push_back(std::move(m));
    }

    const BacktestReport report = rolling_backtest(cfg, ds);

    Metadata meta;
    meta["data"] = data_path;
    meta["methods"] = methods_text;
    meta["profit"] = profit_name;
    meta["seed"] = std::to_string(common.seed);
    meta["beta"] = format_double(beta);
    meta["origin"] = std::to_string(origin);
    meta["iterations"] = std::to_string(iterations);
    const std::string hash = config_hash(canonical_options(meta));
    meta["config_hash"] = hash;

    write_report_rows_csv(common.out_dir + "/report_rows.csv", report, meta);
    write_report_aggregates_csv(common.out_dir + "/report_aggregates.csv", report, meta);
    if (common.plots) {
        write_loss_histogram_svg(common.out_dir + "/loss_hist.svg", report, hash);
        for (const MethodRun& run : report.methods)
            write_series_svg(common.out_dir + "/series_" + run.spec.display_name() + ".svg",
                             report, run.spec.display_name(), hash);
    }
    std::cout << "backtest complete: " << report.methods.size() << " methods x "
              << report.iterations << " iterations\n";
    for (const MethodRun& run : report.methods)
        std::cout << "  " << run.spec.display_name() << ": DL=" << run.downside_loss
                  << " SL=" << run.service_level << "\n";
    return 0;
}

int cmd_report(const CommonOpts& common, const std::string& rows_path) {
    ensure_dir(common.out_dir);
    const BacktestReport report = read_report_rows_csv(rows_path);
    Metadata meta;
    meta["rows"] = rows_path;
    const std::string hash = config_hash(canonical_options(meta));
    meta["config_hash"] = hash;
    write_report_aggregates_csv(common.out_dir + "/report_aggregates.csv", report, meta);
    if (common.plots) {
        write_loss_histogram_svg(common.out_dir + "/loss_hist.svg", report, hash);
        for (const MethodRun& run : report.methods)
            write_series_svg(common.out_dir + "/series_" + run.spec.display_name() + ".svg",
                             report, run.spec.display_name(), hash);
    }
    try {
        for (const RelativeRow& row : relative_metrics(report)) {
            std::cout << row.method << ": rel_dl=";
            std::cout << (row.rel_downside_loss ? format_double(*row.rel_downside_loss) : "/");
            std::cout << " rel_sl="
                      << (row.rel_service_level ? format_double(*row.rel_service_level) : "/")
                      << "\n";
        }
    } catch (const std::exception& e) {
        std::cout << "(relative metrics unavailable: " << e.what() << ")\n";
    }
    return 0;
}

int cmd_verify(const CommonOpts& common, int trials, const std::string& loss_kind) {
    if (loss_kind == "bounded-sine") {
        const ViolationOutcome out = run_bounded_loss_trials(trials, common.seed);
        std::cout << out.subset_violations << "/" << out.total
                  << " trials violated the subset property (expected for a bounded loss); "
                  << out.probe_flagged << "/" << out.total << " flagged by the tail probe\n";
        // The demonstration channel fails verification by construction.
        return out.subset_violations > 0 ? 3 : 0;
    }
    TrialConfig cfg;
    cfg.trials = trials;
    cfg.seed = common.seed;
    const TrialOutcome out = run_theorem_trials(cfg);
    std::cout << out.equality_ok << "/" << out.total << " equality, " << out.subset_ok << "/"
              << out.total << " subset (max relative error " << out.max_relative_error << ")\n";
    for (const std::string& f : out.failures) std::cout << "  " << f << "\n";
    return out.all_ok() ? 0 : 3;
}

} // namespace

std::string config_hash(const std::string& canonical) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream oss;
    oss << std::hex << h;
    return oss.str();
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"risk-averse newsvendor toolkit: CVaR minimization with adaptive data selection"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string config_path;

    // generate
    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    std::string gen_schema = "baseline", gen_error = "mixture";
    int gen_s = 500;
    double gen_feature_sigma = 100.0;
    bool gen_fixed_weights = false;
    gen->add_option("--schema", gen_schema, "baseline|foodbank");
    gen->add_option("--s", gen_s, "number of rows (weeks for foodbank)");
    gen->add_option("--error", gen_error, "mixture[:w1,w2,w3]|normal[:sigma]|student[:scale:nu]");
    gen->add_option("--feature-sigma", gen_feature_sigma, "feature innovation scale");
    gen->add_flag("--fixed-weights", gen_fixed_weights,
                  "keep the given mixture weights instead of drawing from the seed");

    // solve
    auto* solve = app.add_subcommand("solve", "fit the adaptive-selection CVaR minimizer");
    std::string solve_data, solve_schema = "generic", solve_profit = "foodbank",
                solve_convention = "costs", solve_features;
    double solve_beta = 0.95, solve_eta = 15.0, solve_zeta = 1.0;
    solve->add_option("--data", solve_data, "dataset CSV")->required();
    solve->add_option("--schema", solve_schema, "generic|foodbank");
    solve->add_option("--beta", solve_beta, "risk level in (0.5,1)");
    solve->add_option("--profit", solve_profit,
                      "linear0|linear1|linear2|nonlinear0|nonlinear1|nonlinear2|foodbank");
    solve->add_option("--convention", solve_convention, "costs|as-written");
    solve->add_option("--eta", solve_eta, "food-bank overage cost");
    solve->add_option("--zeta", solve_zeta, "food-bank quadratic underage cost");
    solve->add_option("--features", solve_features, "1-based feature list, e.g. 1-4 or 9,10");

    // backtest
    auto* bt = app.add_subcommand("backtest", "rolling-origin benchmark");
    std::string bt_data, bt_schema = "generic", bt_methods = "SA,UM,SQR,NPC",
                bt_profit = "linear1", bt_convention = "costs", bt_um_error;
    double bt_beta = 0.95, bt_eta = 15.0, bt_zeta = 1.0, bt_rmps_tau = -1.0;
    int bt_origin = 300, bt_iterations = 200;
    bool bt_serial = false;
    bt->add_option("--data", bt_data, "dataset CSV")->required();
    bt->add_option("--schema", bt_schema, "generic|foodbank");
    bt->add_option("--beta", bt_beta, "risk level in (0.5,1)");
    bt->add_option("--origin", bt_origin, "training window size");
    bt->add_option("--iterations", bt_iterations, "number of 1-step-ahead evaluations");
    bt->add_option("--methods", bt_methods, "comma list, e.g. SA,UM,SQR,NPC or NPC@1-4");
    bt->add_option("--profit", bt_profit, "profit specification");
    bt->add_option("--convention", bt_convention, "costs|as-written");
    bt->add_option("--eta", bt_eta, "food-bank overage cost");
    bt->add_option("--zeta", bt_zeta, "food-bank quadratic underage cost");
    bt->add_option("--um-error", bt_um_error, "UM's known error law (as --error)");
    bt->add_option("--rmps-tau", bt_rmps_tau, "pinball level for the MPS metric (<0: closed-form low level)");
    bt->add_flag("--serial", bt_serial, "run iterations serially");

    // report
    auto* rep = app.add_subcommand("report", "aggregate tables and plots from stored rows");
    std::string rep_rows;
    rep->add_option("--rows", rep_rows, "report_rows.csv from a backtest")->required();

    // verify
    auto* ver = app.add_subcommand("verify", "run the selection property suite");
    int ver_trials = 1000;
    std::string ver_loss = "builtin";
    ver->add_option("--trials", ver_trials, "number of randomized trials");
    ver->add_option("--loss", ver_loss, "builtin|bounded-sine (assumption-violation demo)");

    for (CLI::App* sub : {gen, solve, bt, rep, ver}) {
        sub->add_option("--config", config_path, "flat key=value config file with [sections]");
        sub->add_option("--seed", common.seed, "master seed");
        sub->add_option("--out", common.out_dir, "output directory");
        sub->add_option("--threads", common.threads, "OpenMP thread count (0 = default)");
        sub->add_flag("--plots", common.plots, "emit SVG plots");
    }

    // Explicit command-line values must win over config-file values: every
    // option takes the last occurrence and config tokens are injected first.
    for (CLI::App* sub : {gen, solve, bt, rep, ver})
        for (CLI::Option* opt : sub->get_options())
            opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::vector<std::string> merged;
    do {
        if (args.empty() || args.front().empty() || args.front().front() == '-') {
            merged = args;
            break;
        }
        std::string cfg_path;
        for (std::size_t i = 0; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) cfg_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) cfg_path = args[i].substr(9);
        }
        merged.push_back(args.front());
        if (!cfg_path.empty()) {
            std::map<std::string, std::string> file_cfg;
            try {
                file_cfg = load_config(cfg_path, args.front());
            } catch (const DataError& e) {
                std::cerr << "data error: " << e.what() << "\n";
                return 2;
            }
            CLI::App* sub = nullptr;
            try {
                sub = app.get_subcommand(args.front());
            } catch (const CLI::OptionNotFound&) {
                sub = nullptr;
            }
            for (const auto& [key, value] : file_cfg) {
                if (key == "config") continue;
                if (sub && sub->get_option_no_throw("--" + key) == nullptr) {
                    std::cerr << "warning: config key '" << key << "' not recognized by '"
                              << args.front() << "', ignored\n";
                    continue;
                }
                merged.push_back("--" + key + "=" + value);
            }
        }
        merged.insert(merged.end(), args.begin() + 1, args.end());
    } while (false);

    std::vector<const char*> argv;
    argv.push_back("nvcvar");
    for (const std::string& a : merged) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    CLI::App* active = app.get_subcommands().front();
    if (common.threads > 0) kernels::set_threads(common.threads);

    try {
        if (active == gen)
            return cmd_generate(common, gen_schema, gen_s, gen_error, gen_feature_sigma,
                                gen_fixed_weights);
        if (active == solve)
            return cmd_solve(common, solve_data, solve_schema, solve_beta, solve_profit,
                             solve_convention, solve_eta, solve_zeta, solve_features);
        if (active == bt)
            return cmd_backtest(common, bt_data, bt_schema, bt_beta, bt_origin, bt_iterations,
                                bt_methods, bt_profit, bt_convention, bt_eta, bt_zeta,
                                bt_um_error, bt_rmps_tau, bt_serial);
        if (active == rep) return cmd_report(common, rep_rows);
        if (active == ver) return cmd_verify(common, ver_trials, ver_loss);
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace nvcvar::cli
