// hip: simulate -> fit -> predict -> evaluate -> bootstrap, one subcommand per stage.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <CLI11.hpp>
#include <hip/io.hpp>
#include <hip/metrics.hpp>
#include <hip/parallel.hpp>
#include <hip/prediction.hpp>
#include <hip/selection.hpp>
#include <hip/simulation.hpp>
#include <hip/softmax.hpp>

namespace fs = std::filesystem;
using namespace hip;

namespace {

enum Exit { ok = 0, data_failure = 2, convergence_failure = 3, io_failure = 4 };

struct Common
{
    std::uint64_t seed = 0;
    int workers = 0;
    fs::path out = ".";
    bool allow_nonconvergence = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_convergence)
{
    cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    cmd->add_option("--workers", c.workers, "Worker threads (default: available parallelism)")
        ->envname("HIP_WORKERS")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
    if (with_convergence) {
        cmd->add_flag("--allow-nonconvergence", c.allow_nonconvergence,
                      "Report convergence failure as a warning (exit 0)");
    }
}

int workers_of(const Common& c)
{
    return c.workers > 0 ? c.workers : default_workers();
}

// The snapshot is the active subcommand's resolved options (config file,
// env, flags, defaults) as a config file `--config` accepts. The worker
// count is left out: it must not change any output.
void write_config_snapshot(const CLI::App& app, const fs::path& dir)
{
    const CLI::App* cmd = app.get_subcommands().front();
    std::istringstream in(cmd->config_to_str(true, false));
    fs::create_directories(dir);
    std::ofstream out(dir / "resolved_config.ini", std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + (dir / "resolved_config.ini").string());
    out << '[' << cmd->get_name() << "]\n";
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "workers" || key == "config" || value.empty() || value == "\"\"") continue;
        out << line << '\n';
    }
}

void warn(const std::vector<std::string>& warnings)
{
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::string replicate_dir(int r)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "rep_%03d", r + 1);
    return buf;
}

// ---------------------------------------------------------------------------

struct SimulateArgs
{
    Common common;
    std::string scenario = "full";
    std::string setting = "p1";
    std::vector<int> p;
    std::string outcome = "continuous";
    int replicates = 1;
    std::vector<int> n = {250, 260};
    int n_signal = 0;  // 0: 50, or the most that fits a custom setting
    double sigma_x = 0.2;
    double sigma_y = 0.5;
};

int run_simulate(const CLI::App& app, const SimulateArgs& a)
{
    SimScenario base;
    base.overlap = a.scenario == "partial" ? Overlap::partial : Overlap::full;
    base.setting = a.setting == "p1"   ? Setting::p1
                 : a.setting == "p2"   ? Setting::p2
                 : a.setting == "p3"   ? Setting::p3
                                       : Setting::custom;
    if (base.setting == Setting::custom) {
        if (a.p.empty()) throw Error(ErrorKind::invalid_argument, "--setting custom needs --p");
        base.custom_p = a.p;
        if (a.n_signal == 0) {
            const int min_p = *std::min_element(a.p.begin(), a.p.end());
            const int fits = base.overlap == Overlap::full ? min_p : (2 * min_p) / 3;
            base.n_signal = std::max(1, std::min(base.n_signal, fits - fits % 2));
        }
    } else if (!a.p.empty()) {
        throw Error(ErrorKind::invalid_argument, "--p is only valid with --setting custom");
    }
    base.outcome = a.outcome == "multiclass" ? OutcomeKind::multiclass : OutcomeKind::continuous;
    base.n = a.n;
    if (a.n_signal > 0) base.n_signal = a.n_signal;
    base.sigma_x = a.sigma_x;
    base.sigma_y = a.sigma_y;
    base.validate();

    for (int r = 0; r < a.replicates; ++r) {
        SimScenario sc = base;
        sc.seed = derive_seed(a.common.seed, static_cast<std::uint64_t>(r));
        const SimulatedData sim = generate_dataset(sc);
        const fs::path dir = a.common.out / replicate_dir(r);
        io::write_truth(dir / "truth.csv", sim.train, sim.truth.signal);
        io::write_bundle(dir / "train", sim.train, std::string("../truth.csv"));
        io::write_bundle(dir / "test", sim.test, std::string("../truth.csv"));
    }
    write_config_snapshot(app, a.common.out);
    return ok;
}

// ---------------------------------------------------------------------------

struct FitArgs
{
    Common common;
    fs::path manifest;
    std::string k = "2";
    std::string k_method = "simple";
    std::string tune = "random";
    double lambda_g = 0.0;
    double lambda_xi = 0.0;
    double threshold = 0.10;
    int grid_steps = 8;
    double lambda_max = 1.0;
    double fraction = 0.15;
    bool standardize_x = false;
    bool eigen_squared = false;
    bool scree_standardized = false;
    int max_outer = 500;
    int max_inner = 1000;
    double eps_outer = 1e-6;
    double eps_inner = 1e-6;
};

FitOptions fit_options(const FitArgs& a)
{
    FitOptions o;
    o.hyper.lambda_g = a.lambda_g;
    o.hyper.lambda_xi = a.lambda_xi;
    o.hyper.max_outer_iters = a.max_outer;
    o.hyper.max_inner_iters = a.max_inner;
    o.hyper.eps_outer = a.eps_outer;
    o.hyper.eps_inner = a.eps_inner;
    o.standardize.x = a.standardize_x;
    o.seed = a.common.seed;
    return o;
}

int convergence_exit(const FactorModel& m, bool allow)
{
    if (m.status == FitStatus::converged) return ok;
    std::cerr << (allow ? "warning: " : "error: ") << "fit did not converge (" << to_string(m.status) << ")\n";
    return allow ? ok : convergence_failure;
}

int run_fit(const CLI::App& app, const FitArgs& a)
{
    const io::Bundle bundle = io::load_manifest(a.manifest);
    const MultiViewDataset& data = bundle.data;
    const int workers = workers_of(a.common);
    FitOptions opts = fit_options(a);

    std::optional<LambdaGrid> grid;
    if (a.tune != "none") {
        grid = make_lambda_grid(a.grid_steps, a.lambda_max, a.tune == "grid" ? GridMode::grid : GridMode::random,
                                a.fraction, a.common.seed);
    }

    KSelectOptions kopts;
    kopts.use_raw = !a.scree_standardized;
    kopts.proxy = a.eigen_squared ? EigenProxy::squared_singular_values : EigenProxy::singular_values;

    FactorModel model;
    std::vector<BicRecord> records;
    if (a.k == "auto") {
        io::write_scree(a.common.out / "scree.csv", scree_values(data, kopts));
        if (a.k_method == "algorithmic") {
            if (!grid) throw Error(ErrorKind::invalid_argument, "--k-method algorithmic needs --tune random|grid");
            KSelection ks = select_k_algorithmic(data, a.threshold, *grid, opts, kopts, workers);
            records = ks.at_k.records;
            records.insert(records.end(), ks.at_k_plus_1.records.begin(), ks.at_k_plus_1.records.end());
            model = ks.K == ks.at_k.best_model.components() ? ks.at_k.best_model : ks.at_k_plus_1.best_model;
        } else {
            opts.hyper.K = select_k_simple(data, a.threshold, kopts);
        }
    } else {
        try {
            std::size_t used = 0;
            opts.hyper.K = std::stoi(a.k, &used);
            if (used != a.k.size()) throw std::invalid_argument(a.k);
        } catch (const std::exception&) {
            throw Error(ErrorKind::invalid_argument, "--k must be a positive integer or 'auto'");
        }
    }

    if (model.G.empty()) {
        if (grid) {
            LambdaSearchResult res = search_lambda(data, opts.hyper.K, *grid, opts, workers);
            records = std::move(res.records);
            model = std::move(res.best_model);
        } else {
            model = fit(data, opts);
        }
    }
    warn(model.standardizer.warnings);
    warn(model.warnings);

    fs::create_directories(a.common.out);
    io::save_model(a.common.out / "model.json", model);
    io::write_selection(a.common.out / "selection.csv", selection_report(model));
    io::write_loss_trace(a.common.out / "loss_trace.csv", model.trace);
    if (!records.empty()) io::write_bic_table(a.common.out / "bic_table.csv", records);
    write_config_snapshot(app, a.common.out);
    std::cout << "K=" << model.components() << " lambda_g=" << io::format_double(model.hyper.lambda_g)
              << " lambda_xi=" << io::format_double(model.hyper.lambda_xi) << " status=" << to_string(model.status)
              << '\n';
    return convergence_exit(model, a.common.allow_nonconvergence);
}

// ---------------------------------------------------------------------------

struct PredictArgs
{
    Common common;
    fs::path manifest;
    fs::path model;
    std::optional<double> ridge_eps;
};

int run_predict(const CLI::App& app, const PredictArgs& a)
{
    const FactorModel model = io::load_model(a.model);
    const io::Bundle bundle = io::load_manifest(a.manifest);
    const PredictionResult pred = predict(model, bundle.data, a.ridge_eps);
    warn(pred.warnings);
    io::write_predictions(a.common.out / "predictions.csv", model, bundle.data, pred);
    write_config_snapshot(app, a.common.out);
    return ok;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs
{
    Common common;
    fs::path manifest;
    fs::path model;
    fs::path truth;
    fs::path selection;
    std::string replicate;
};

// selection.csv rows name variables; map them back to column indices.
std::vector<std::vector<std::vector<int>>> read_selection(const fs::path& path, const MultiViewDataset& data)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path.string());
    std::vector<std::vector<std::vector<int>>> sel(data.num_views(),
                                                   std::vector<std::vector<int>>(data.num_subgroups()));
    std::string line;
    std::getline(in, line);
    auto find = [&](const std::vector<std::string>& names, const std::string& key, const char* what) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == key) return static_cast<int>(i);
        throw Error(ErrorKind::data, path.string() + ": unknown " + what + " '" + key + "'");
    };
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) throw Error(ErrorKind::data, path.string() + ": expected view,subgroup,variable");
        const int d = find(data.view_names(), cells[0], "view");
        const int s = find(data.subgroup_names(), cells[1], "subgroup");
        sel[d][s].push_back(find(data.variable_names()[d], cells[2], "variable"));
    }
    return sel;
}

int run_evaluate(const CLI::App& app, const EvaluateArgs& a)
{
    const io::Bundle bundle = io::load_manifest(a.manifest);
    const MultiViewDataset& test = bundle.data;
    std::optional<FactorModel> model;
    if (!a.model.empty()) model = io::load_model(a.model);

    fs::path truth_path = a.truth;
    if (truth_path.empty() && bundle.truth) truth_path = *bundle.truth;

    std::vector<std::vector<std::vector<int>>> selected;
    if (!a.selection.empty()) selected = read_selection(a.selection, test);
    else if (model) {
        const SelectionReport rep = selection_report(*model);
        selected.assign(test.num_views(), std::vector<std::vector<int>>(test.num_subgroups()));
        for (int d = 0; d < test.num_views(); ++d)
            for (int s = 0; s < test.num_subgroups(); ++s) selected[d][s] = rep.indices(d, s);
    }

    // Prediction metrics are per subgroup; they repeat on each view's row.
    std::vector<std::map<std::string, double>> per_subgroup(test.num_subgroups());
    if (model && test.outcome().present()) {
        const PredictionResult pred = predict(*model, test);
        warn(pred.warnings);
        for (int s = 0; s < test.num_subgroups(); ++s) {
            auto& m = per_subgroup[s];
            if (model->outcome == OutcomeKind::continuous) {
                m["mse"] = test_mse(pred.y[s], test.y(s));
                if (model->standardizer.transforms_y()) {
                    m["mse_standardized"] = test_mse(model->standardizer.apply_y(s, pred.y[s]),
                                                     model->standardizer.apply_y(s, test.y(s)));
                }
            } else {
                const auto truth = labels_from_onehot(test.y(s));
                std::map<int, int> counts;
                for (int l : truth) ++counts[l];
                int majority = 0;
                for (const auto& [label, c] : counts) majority = std::max(majority, c);
                m["accuracy"] = accuracy(pred.labels[s], truth);
                m["majority_baseline"] = truth.empty() ? 1.0 : double(majority) / double(truth.size());
            }
        }
    }

    std::optional<std::vector<std::vector<std::vector<int>>>> truth;
    if (!truth_path.empty() && !selected.empty()) truth = io::read_truth(truth_path, test);

    fs::create_directories(a.common.out);
    std::ofstream out(a.common.out / "metrics.csv", std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write metrics.csv");
    const std::vector<std::string> prediction_cols = {"mse", "mse_standardized", "accuracy", "majority_baseline"};
    out << "replicate,view,subgroup,tp,fp,fn,tn,tpr,fpr,f1";
    for (const auto& c : prediction_cols) out << ',' << c;
    out << '\n';
    for (int d = 0; d < test.num_views(); ++d) {
        for (int s = 0; s < test.num_subgroups(); ++s) {
            out << a.replicate << ',' << test.view_names()[d] << ',' << test.subgroup_names()[s];
            if (truth) {
                const SelectionScore sc = score_selection(selected[d][s], (*truth)[d][s], test.dims().p[d]);
                out << ',' << sc.tp << ',' << sc.fp << ',' << sc.fn << ',' << sc.tn << ',' << io::format_double(sc.tpr)
                    << ',' << io::format_double(sc.fpr) << ',' << io::format_double(sc.f1);
            } else {
                out << ",,,,,,,";
            }
            for (const auto& c : prediction_cols) {
                out << ',';
                if (auto it = per_subgroup[s].find(c); it != per_subgroup[s].end()) out << io::format_double(it->second);
            }
            out << '\n';
        }
    }
    write_config_snapshot(app, a.common.out);
    return ok;
}

// ---------------------------------------------------------------------------

struct BootstrapArgs
{
    FitArgs fit;
    int n_boot = 50;
    std::vector<double> top_fraction = {0.1};
};

int run_bootstrap(const CLI::App& app, const BootstrapArgs& a)
{
    const io::Bundle bundle = io::load_manifest(a.fit.manifest);
    FitOptions opts = fit_options(a.fit);
    try {
        opts.hyper.K = a.fit.k == "auto" ? select_k_simple(bundle.data, a.fit.threshold) : std::stoi(a.fit.k);
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::invalid_argument, "--k must be a positive integer or 'auto'");
    }

    BootstrapOptions boot;
    boot.n_boot = a.n_boot;
    boot.top_fraction = a.top_fraction;
    boot.seed = a.fit.common.seed;
    boot.workers = workers_of(a.fit.common);
    if (a.fit.tune != "none") {
        boot.grid = make_lambda_grid(a.fit.grid_steps, a.fit.lambda_max,
                                     a.fit.tune == "grid" ? GridMode::grid : GridMode::random, a.fit.fraction,
                                     a.fit.common.seed);
    }
    const SelectionReport report = bootstrap_stability(bundle.data, opts, boot);
    io::write_selection(a.fit.common.out / "stability.csv", report);
    write_config_snapshot(app, a.fit.common.out);
    return ok;
}

void add_fit_flags(CLI::App* cmd, FitArgs& f)
{
    cmd->add_option("--manifest", f.manifest, "Dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--k", f.k, "Number of components, or 'auto'")->capture_default_str();
    cmd->add_option("--threshold", f.threshold, "Scree threshold for --k auto")->capture_default_str();
    cmd->add_option("--tune", f.tune, "Lambda search")
        ->check(CLI::IsMember({"random", "grid", "none"}))
        ->capture_default_str();
    cmd->add_option("--lambda-g", f.lambda_g, "lambda_G when --tune none")->capture_default_str();
    cmd->add_option("--lambda-xi", f.lambda_xi, "lambda_xi when --tune none")->capture_default_str();
    cmd->add_option("--grid-steps", f.grid_steps, "Values per lambda axis")->capture_default_str();
    cmd->add_option("--lambda-max", f.lambda_max, "Largest lambda on the grid")->capture_default_str();
    cmd->add_option("--fraction", f.fraction, "Share of grid pairs tried in random mode")->capture_default_str();
    cmd->add_flag("--standardize-x", f.standardize_x, "Standardize X columns per view and subgroup");
    cmd->add_option("--max-outer", f.max_outer, "Outer iteration cap")->capture_default_str();
    cmd->add_option("--max-inner", f.max_inner, "Inner iteration cap")->capture_default_str();
    cmd->add_option("--eps-outer", f.eps_outer, "Outer relative tolerance")->capture_default_str();
    cmd->add_option("--eps-inner", f.eps_inner, "Inner tolerance")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hierarchical integrative factor model: simulate, fit, predict, evaluate, bootstrap"};
    app.set_config("--config", "", "INI-style config: [subcommand] sections of key = value lines; flags override it");
    app.fallthrough();
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Write simulated train/test bundles with ground truth");
    simulate->add_option("--scenario", sim.scenario)->check(CLI::IsMember({"full", "partial"}))->capture_default_str();
    simulate->add_option("--setting", sim.setting)
        ->check(CLI::IsMember({"p1", "p2", "p3", "custom"}))
        ->capture_default_str();
    simulate->add_option("--p", sim.p, "Per-view variable counts for --setting custom")->delimiter(',');
    simulate->add_option("--n", sim.n, "Per-subgroup sample sizes")->delimiter(',')->capture_default_str();
    simulate->add_option("--n-signal", sim.n_signal, "Signal variables per subgroup (default 50)")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--sigma-x", sim.sigma_x, "Noise scale of the views")->capture_default_str();
    simulate->add_option("--sigma-y", sim.sigma_y, "Noise scale of a continuous outcome")->capture_default_str();
    simulate->add_option("--outcome", sim.outcome)
        ->check(CLI::IsMember({"continuous", "multiclass"}))
        ->capture_default_str();
    simulate->add_option("--replicates", sim.replicates)->check(CLI::PositiveNumber)->capture_default_str();
    add_common(simulate, sim.common, false);

    FitArgs fa;
    auto* fitc = app.add_subcommand("fit", "Fit (and tune) a model on a manifest");
    add_fit_flags(fitc, fa);
    fitc->add_option("--k-method", fa.k_method, "K rule for --k auto")
        ->check(CLI::IsMember({"simple", "algorithmic"}))
        ->capture_default_str();
    fitc->add_flag("--eigen-squared", fa.eigen_squared, "Scree on squared singular values");
    fitc->add_flag("--scree-standardized", fa.scree_standardized, "Scree on standardized views");
    add_common(fitc, fa.common, true);

    PredictArgs pa;
    double ridge = -1.0;
    auto* predictc = app.add_subcommand("predict", "Predict scores and outcomes for a manifest");
    predictc->add_option("--manifest", pa.manifest)->required()->check(CLI::ExistingFile);
    predictc->add_option("--model", pa.model)->required()->check(CLI::ExistingFile);
    predictc->add_option("--ridge-eps", ridge, "Relative ridge (default: the model's)");
    add_common(predictc, pa.common, false);

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "Selection and prediction metrics");
    evaluate->add_option("--manifest", ea.manifest, "Test manifest")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--model", ea.model, "Fitted model")->check(CLI::ExistingFile);
    evaluate->add_option("--truth", ea.truth, "Truth CSV (default: the manifest's)")->check(CLI::ExistingFile);
    evaluate->add_option("--selection", ea.selection, "Selection CSV (default: the model's support)")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--replicate", ea.replicate, "Label written in the replicate column");
    add_common(evaluate, ea.common, false);

    BootstrapArgs ba;
    ba.fit.tune = "none";
    auto* bootstrap = app.add_subcommand("bootstrap", "Bootstrap stability selection");
    add_fit_flags(bootstrap, ba.fit);
    bootstrap->add_option("--n-boot", ba.n_boot)->check(CLI::PositiveNumber)->capture_default_str();
    bootstrap->add_option("--top-fraction", ba.top_fraction, "Kept share per view (one value or one per view)")
        ->delimiter(',')
        ->capture_default_str();
    add_common(bootstrap, ba.fit.common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : data_failure;
    }

    try {
        if (*simulate) return run_simulate(app, sim);
        if (*fitc) return run_fit(app, fa);
        if (*predictc) {
            if (ridge >= 0.0) pa.ridge_eps = ridge;
            return run_predict(app, pa);
        }
        if (*evaluate) return run_evaluate(app, ea);
        if (*bootstrap) return run_bootstrap(app, ba);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
        case ErrorKind::io: return io_failure;
        case ErrorKind::convergence: return convergence_failure;
        default: return data_failure;
        }
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return io_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return data_failure;
    }
    return data_failure;
}
