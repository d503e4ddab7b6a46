#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <hip/parallel.hpp>
#include <hip/selection.hpp>

namespace hip {

void LambdaGrid::validate() const
{
    auto fail = [](const std::string& m) { throw Error(ErrorKind::invalid_argument, m); };
    if (steps < 1) fail("grid needs at least one step");
    if (!(lambda_max > 0.0)) fail("lambda_max must be positive");
    if (mode == GridMode::random && !(fraction > 0.0 && fraction <= 1.0)) fail("grid fraction must lie in (0, 1]");
    if (candidates.empty()) fail("lambda grid has no candidates");
}

LambdaGrid make_lambda_grid(int steps, double lambda_max, GridMode mode, double fraction, std::uint64_t seed)
{
    LambdaGrid grid;
    grid.steps = steps;
    grid.lambda_max = lambda_max;
    grid.mode = mode;
    grid.fraction = fraction;
    grid.seed = seed;
    if (steps < 1 || !(lambda_max > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "grid needs steps >= 1 and lambda_max > 0");
    }

    std::vector<LambdaPair> all;
    for (int i = 1; i <= steps; ++i)
        for (int j = 1; j <= steps; ++j)
            all.push_back({lambda_max * i / steps, lambda_max * j / steps});

    if (mode == GridMode::random) {
        if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(ErrorKind::invalid_argument, "grid fraction must lie in (0, 1]");
        // the small epsilon keeps e.g. 0.15 * 64 = 9.6000000000000014 from rounding up twice
        const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(all.size()) - 1e-9));
        Rng rng(seed);
        rng.shuffle(all);
        all.resize(std::max<std::size_t>(1, keep));
    }
    std::sort(all.begin(), all.end());
    grid.candidates = std::move(all);
    return grid;
}

int model_size(const FactorModel& model, double zero_tol)
{
    int size = 0;
    for (int d = 0; d < model.num_views(); ++d)
        for (int s = 0; s < model.num_subgroups(); ++s)
            size += static_cast<int>(support(model.loading(d, s), zero_tol).size());
    return size;
}

double bic(const FactorModel& model, const MultiViewDataset& working, double zero_tol)
{
    const double loss = outcome_loss(model, working) + reconstruction_loss(model, working);
    return 2.0 * loss + model_size(model, zero_tol) * std::log(static_cast<double>(working.dims().total_n));
}

std::size_t pick_best(const std::vector<BicRecord>& records)
{
    if (records.empty()) throw Error(ErrorKind::invalid_argument, "no BIC records to choose from");
    const bool all_diverged = std::all_of(records.begin(), records.end(),
                                          [](const BicRecord& r) { return r.status == FitStatus::diverged; });
    auto better = [all_diverged](const BicRecord& a, const BicRecord& b) {
        const double ka = all_diverged ? a.loss : a.bic;
        const double kb = all_diverged ? b.loss : b.bic;
        if (ka != kb) return ka < kb;
        const double sa = a.lambda.lambda_g + a.lambda.lambda_xi;
        const double sb = b.lambda.lambda_g + b.lambda.lambda_xi;
        if (sa != sb) return sa > sb;
        return a.lambda < b.lambda;
    };
    std::size_t best = records.size();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!all_diverged && records[i].status == FitStatus::diverged) continue;
        if (!std::isfinite(all_diverged ? records[i].loss : records[i].bic)) continue;
        if (best == records.size() || better(records[i], records[best])) best = i;
    }
    return best == records.size() ? 0 : best;
}

LambdaSearchResult search_lambda(const MultiViewDataset& data, int K, const LambdaGrid& grid,
                                 const FitOptions& opts, int workers)
{
    grid.validate();
    FitOptions base = opts;
    base.hyper.K = K;
    base.validate();

    Standardized prepared = standardize(data, base.standardize);
    FactorModel start = initialize(prepared.data, K, base.seed);
    start.standardizer = prepared.transform;

    const std::size_t count = grid.candidates.size();
    std::vector<FactorModel> models(count);
    std::vector<BicRecord> records(count);
    parallel_for(count, workers, [&](std::size_t i) {
        FitOptions o = base;
        o.hyper.lambda_g = grid.candidates[i].lambda_g;
        o.hyper.lambda_xi = grid.candidates[i].lambda_xi;
        models[i] = fit_from(start, prepared.data, o);
        BicRecord& r = records[i];
        r.lambda = grid.candidates[i];
        r.K = K;
        r.model_size = model_size(models[i]);
        r.loss = models[i].trace.empty() ? std::numeric_limits<double>::infinity()
                                         : objective(models[i], prepared.data).unpenalized;
        r.bic = bic(models[i], prepared.data);
        r.status = models[i].status;
    });

    LambdaSearchResult result;
    result.all_diverged = std::all_of(records.begin(), records.end(),
                                      [](const BicRecord& r) { return r.status == FitStatus::diverged; });
    const std::size_t best = pick_best(records);
    result.best = records[best].lambda;
    result.best_model = std::move(models[best]);
    result.records = std::move(records);
    return result;
}

// ---------------------------------------------------------------------------

Vector scree_values(const MultiViewDataset& data, const KSelectOptions& options)
{
    const MultiViewDataset source = options.use_raw ? data : standardize(data, {true, false}).data;
    Eigen::BDCSVD<Matrix> svd(source.concatenated());
    Vector values = svd.singularValues();
    if (options.proxy == EigenProxy::squared_singular_values) values = values.cwiseAbs2();
    return values;
}

int select_k_from_spectrum(const Vector& values, double threshold)
{
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "threshold must lie in (0, 1)");
    }
    if (values.size() == 0) throw Error(ErrorKind::invalid_argument, "empty spectrum");
    for (Eigen::Index k = 0; k + 1 < values.size(); ++k) {
        if (values(k) <= 0.0) return static_cast<int>(k) + 1;
        const double change = (values(k) - values(k + 1)) / values(k);
        if (change < threshold) return static_cast<int>(k) + 1;
    }
    return static_cast<int>(values.size());
}

int select_k_simple(const MultiViewDataset& data, double threshold, const KSelectOptions& options)
{
    return select_k_from_spectrum(scree_values(data, options), threshold);
}

KSelection select_k_algorithmic(const MultiViewDataset& data, double threshold, const LambdaGrid& grid,
                                const FitOptions& opts, const KSelectOptions& k_options, int workers)
{
    KSelection out;
    out.simple_k = select_k_simple(data, threshold, k_options);
    out.K = out.simple_k;
    out.at_k = search_lambda(data, out.simple_k, grid, opts, workers);

    const auto& n = data.dims().n;
    const int next = out.simple_k + 1;
    if (next <= *std::min_element(n.begin(), n.end()) && next <= data.dims().total_p()) {
        out.at_k_plus_1 = search_lambda(data, next, grid, opts, workers);
        const double bic_k = out.at_k.records[pick_best(out.at_k.records)].bic;
        const double bic_next = out.at_k_plus_1.records[pick_best(out.at_k_plus_1.records)].bic;
        if (bic_next < bic_k) out.K = next;
    }
    return out;
}

// ---------------------------------------------------------------------------

BootstrapSample draw_bootstrap(const std::vector<int>& sizes, Rng& rng)
{
    BootstrapSample sample;
    for (int n : sizes) {
        std::vector<int> drawn(static_cast<std::size_t>(n));
        std::vector<char> hit(static_cast<std::size_t>(n), 0);
        for (auto& i : drawn) {
            i = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            hit[static_cast<std::size_t>(i)] = 1;
        }
        std::vector<int> oob;
        for (int i = 0; i < n; ++i)
            if (!hit[static_cast<std::size_t>(i)]) oob.push_back(i);
        sample.in_bag.push_back(std::move(drawn));
        sample.out_of_bag.push_back(std::move(oob));
    }
    return sample;
}

MultiViewDataset resample(const MultiViewDataset& data, const BootstrapSample& sample)
{
    const int D = data.num_views(), S = data.num_subgroups();
    auto take = [](const Matrix& m, const std::vector<int>& rows) {
        Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
        return out;
    };
    std::vector<std::vector<Matrix>> views(D, std::vector<Matrix>(S));
    std::vector<Matrix> ys;
    for (int s = 0; s < S; ++s) {
        for (int d = 0; d < D; ++d) views[d][s] = take(data.x(d, s), sample.in_bag[s]);
        if (data.outcome().present()) ys.push_back(take(data.y(s), sample.in_bag[s]));
    }
    return data.with_data(std::move(views), std::move(ys));
}

SelectionReport selection_report(const FactorModel& model, double zero_tol)
{
    SelectionReport report;
    report.view_names = model.view_names;
    report.subgroup_names = model.subgroup_names;
    const int D = model.num_views(), S = model.num_subgroups();
    report.selected.assign(D, std::vector<std::vector<SelectedVariable>>(S));
    for (int d = 0; d < D; ++d) {
        for (int s = 0; s < S; ++s) {
            const Matrix B = model.loading(d, s);
            for (int l : support(B, zero_tol)) {
                const std::string name = d < static_cast<int>(model.variable_names.size())
                                             ? model.variable_names[d][static_cast<std::size_t>(l)]
                                             : std::to_string(l);
                report.selected[d][s].push_back({l, name, 1, B.row(l).cwiseAbs().sum()});
            }
        }
    }
    report.classify();
    return report;
}

SelectionReport bootstrap_stability(const MultiViewDataset& data, const FitOptions& opts,
                                    const BootstrapOptions& boot)
{
    const int D = data.num_views(), S = data.num_subgroups();
    if (boot.n_boot < 1) throw Error(ErrorKind::invalid_argument, "n_boot must be at least 1");
    std::vector<double> fractions = boot.top_fraction.empty() ? std::vector<double>{1.0} : boot.top_fraction;
    if (fractions.size() == 1) fractions.assign(D, fractions[0]);
    if (static_cast<int>(fractions.size()) != D) {
        throw Error(ErrorKind::invalid_argument, "top_fraction needs one value or one per view");
    }
    for (double f : fractions)
        if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorKind::invalid_argument, "top_fraction must lie in (0, 1]");

    std::vector<SelectionReport> runs(static_cast<std::size_t>(boot.n_boot));
    parallel_for(runs.size(), boot.workers, [&](std::size_t b) {
        Rng rng(derive_seed(boot.seed, b));
        const MultiViewDataset sample = resample(data, draw_bootstrap(data.dims().n, rng));
        FactorModel model = boot.grid ? search_lambda(sample, opts.hyper.K, *boot.grid, opts, 1).best_model
                                      : fit(sample, opts);
        runs[b] = selection_report(model, boot.zero_tol);
    });

    SelectionReport report;
    report.view_names = data.view_names();
    report.subgroup_names = data.subgroup_names();
    report.selected.assign(D, std::vector<std::vector<SelectedVariable>>(S));
    for (int d = 0; d < D; ++d) {
        const int p = data.dims().p[d];
        for (int s = 0; s < S; ++s) {
            std::vector<int> counts(static_cast<std::size_t>(p), 0);
            std::vector<double> weights(static_cast<std::size_t>(p), 0.0);
            for (const auto& run : runs) {
                for (const auto& v : run.selected[d][s]) {
                    ++counts[static_cast<std::size_t>(v.index)];
                    weights[static_cast<std::size_t>(v.index)] += v.weight;
                }
            }
            std::vector<int> order;
            for (int l = 0; l < p; ++l)
                if (counts[static_cast<std::size_t>(l)] > 0) order.push_back(l);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
            });
            const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(fractions[d] * p - 1e-9)));
            std::vector<SelectedVariable> chosen;
            for (std::size_t i = 0; i < order.size(); ++i) {
                const int l = order[i];
                const int c = counts[static_cast<std::size_t>(l)];
                if (i >= keep && c < counts[static_cast<std::size_t>(order[keep - 1])]) break;
                chosen.push_back({l, data.variable_names()[d][static_cast<std::size_t>(l)], c,
                                  weights[static_cast<std::size_t>(l)] / c});
            }
            std::sort(chosen.begin(), chosen.end(),
                      [](const SelectedVariable& a, const SelectedVariable& b) { return a.index < b.index; });
            report.selected[d][s] = std::move(chosen);
        }
    }
    report.classify();
    return report;
}

} // namespace hip
