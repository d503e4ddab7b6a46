#include <algorithm>
#include <set>
#include <doctest.h>
#include <hip/selection.hpp>
#include "support.hpp"

using namespace hip;
using test::make_toy;

namespace {

FactorModel zero_model(const MultiViewDataset& data, int K)
{
    FactorModel m = initialize(data, K, 0);
    for (auto& g : m.G) g.setOnes();
    for (auto& view : m.Xi)
        for (auto& xi : view) xi.setZero();
    for (auto& z : m.Z) z.setZero();
    m.Theta.setZero();
    return m;
}

FitOptions quick()
{
    FitOptions o;
    o.hyper.K = 2;
    o.hyper.max_outer_iters = 40;
    return o;
}

} // namespace

TEST_CASE("lambda grid")
{
    const LambdaGrid full = make_lambda_grid(8, 1.0, GridMode::grid);
    CHECK(full.candidates.size() == 64);
    const LambdaGrid rnd = make_lambda_grid(8, 1.0, GridMode::random, 0.15, 3);
    CHECK(rnd.candidates.size() == 10);
    std::set<std::pair<double, double>> distinct;
    for (const auto& c : rnd.candidates) {
        CHECK(c.lambda_g > 0.0);
        CHECK(c.lambda_g <= 1.0);
        CHECK(c.lambda_xi > 0.0);
        CHECK(c.lambda_xi <= 1.0);
        distinct.insert({c.lambda_g, c.lambda_xi});
    }
    CHECK(distinct.size() == 10);
    CHECK(std::is_sorted(rnd.candidates.begin(), rnd.candidates.end()));
    CHECK(make_lambda_grid(8, 1.0, GridMode::random, 0.15, 3).candidates == rnd.candidates);
    CHECK_THROWS_AS(make_lambda_grid(0, 1.0, GridMode::grid), Error);
    CHECK_THROWS_AS(make_lambda_grid(4, -1.0, GridMode::grid), Error);
    CHECK_THROWS_AS(make_lambda_grid(4, 1.0, GridMode::random, 0.0), Error);
}

TEST_CASE("model size counts nonzero rows over every loading")
{
    const auto toy = make_toy(1);
    FactorModel m = zero_model(toy.data, 2);
    m.Xi[0][0].topRows(3).setOnes();
    m.Xi[1][1].topRows(4).setOnes();
    CHECK(model_size(m) == 7);
}

TEST_CASE("bic")
{
    SUBCASE("a perfect empty fit scores zero")
    {
        std::vector<std::vector<Matrix>> views{{Matrix::Zero(4, 3), Matrix::Zero(5, 3)}};
        const MultiViewDataset data(views, Outcome{OutcomeKind::continuous, {Matrix::Zero(4, 1), Matrix::Zero(5, 1)}, {}});
        FactorModel m = zero_model(data, 1);
        CHECK(bic(m, data) == 0.0);
    }
    SUBCASE("larger support at equal loss scores higher")
    {
        const auto toy = make_toy(2);
        FactorModel m = zero_model(toy.data, 2);
        const double loss = objective(m, toy.data).unpenalized;
        const double small = bic(m, toy.data);
        CHECK(small == doctest::Approx(2 * loss));
        m.Xi[0][1].topRows(2).setOnes();  // Z = 0, so the loss is unchanged
        CHECK(objective(m, toy.data).unpenalized == loss);
        CHECK(bic(m, toy.data) > small);
        CHECK(bic(m, toy.data) == doctest::Approx(2 * loss + 2 * std::log(26.0)));
    }
}

TEST_CASE("pick_best")
{
    BicRecord a{{0.25, 0.5}, 2, 10.0, 5, 1.0, FitStatus::converged};
    BicRecord b{{0.5, 0.5}, 2, 10.0, 5, 1.0, FitStatus::converged};
    BicRecord c{{0.75, 0.25}, 2, 10.0, 5, 1.0, FitStatus::converged};
    BicRecord worse{{1.0, 1.0}, 2, 11.0, 5, 1.0, FitStatus::converged};
    CHECK(pick_best({a, b}) == 1);  // larger lambda sum
    CHECK(pick_best({c, b}) == 1);  // equal sums: lexicographically smaller pair
    CHECK(pick_best({worse, a}) == 1);
    BicRecord diverged{{0.1, 0.1}, 2, 1.0, 5, 0.5, FitStatus::diverged};
    CHECK(pick_best({diverged, a}) == 1);
    BicRecord diverged2{{0.2, 0.2}, 2, 0.5, 5, 0.7, FitStatus::diverged};
    CHECK(pick_best({diverged2, diverged}) == 1);  // all diverged: lowest loss
}

TEST_CASE("search_lambda")
{
    const auto toy = make_toy(3, OutcomeKind::continuous, 0.3, {20, 22}, {8, 9});
    SUBCASE("one candidate is returned as is")
    {
        const LambdaGrid g = make_lambda_grid(1, 0.4, GridMode::grid);
        const LambdaSearchResult r = search_lambda(toy.data, 2, g, quick());
        CHECK(r.records.size() == 1);
        CHECK(r.best == LambdaPair{0.4, 0.4});
        CHECK(r.best_model.hyper.lambda_g == 0.4);
    }
    SUBCASE("random mode with a = 8 fits ten candidates and is reproducible")
    {
        const LambdaGrid g = make_lambda_grid(8, 1.0, GridMode::random, 0.15, 7);
        const LambdaSearchResult serial = search_lambda(toy.data, 2, g, quick(), 1);
        const LambdaSearchResult pooled = search_lambda(toy.data, 2, g, quick(), 3);
        CHECK(serial.records.size() == 10);
        CHECK(serial.best == pooled.best);
        for (std::size_t i = 0; i < serial.records.size(); ++i) {
            CHECK(serial.records[i].bic == pooled.records[i].bic);
            CHECK(serial.records[i].lambda == g.candidates[i]);
        }
        const std::size_t best = pick_best(serial.records);
        CHECK(serial.records[best].lambda == serial.best);
        for (const auto& r : serial.records) CHECK(serial.records[best].bic <= r.bic);
    }
}

TEST_CASE("K from a spectrum")
{
    CHECK(select_k_from_spectrum((Vector(4) << 10, 5, 4.8, 4.7).finished(), 0.10) == 2);
    const Vector sharp = (Vector(5) << 10, 1, 0.99, 0.98, 0.97).finished();
    CHECK((sharp(0) - sharp(1)) / sharp(0) >= 0.10);
    CHECK(select_k_from_spectrum(sharp, 0.10) >= 2);
    CHECK(select_k_from_spectrum((Vector(3) << 10, 9.5, 9.2).finished(), 0.10) == 1);
    CHECK_THROWS_AS(select_k_from_spectrum(sharp, 0.0), Error);
    CHECK_THROWS_AS(select_k_from_spectrum(sharp, 1.0), Error);
}

TEST_CASE("raising the threshold never raises K")
{
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(8);
        for (auto& x : v) x = rng.uniform(0.01, 10.0);
        std::sort(v.rbegin(), v.rend());
        const Vector e = Eigen::Map<Vector>(v.data(), 8);
        int previous = 100;
        for (double t = 0.01; t < 1.0; t += 0.04) {
            const int k = select_k_from_spectrum(e, t);
            CHECK(k <= previous);
            previous = k;
        }
    }
}

TEST_CASE("scree values")
{
    const auto toy = make_toy(6);
    const Vector sv = scree_values(toy.data);
    const Eigen::BDCSVD<Matrix> svd(toy.data.concatenated());
    CHECK((sv - svd.singularValues()).cwiseAbs().maxCoeff() <= 1e-10);
    const Vector sq = scree_values(toy.data, {true, EigenProxy::squared_singular_values});
    CHECK((sq - svd.singularValues().cwiseAbs2()).cwiseAbs().maxCoeff() <= 1e-8);
    const Vector st = scree_values(toy.data, {false, EigenProxy::singular_values});
    CHECK(st.size() == sv.size());
    CHECK((st - sv).norm() > 1e-6);
}

TEST_CASE("algorithmic K keeps the smaller best BIC")
{
    const auto toy = make_toy(8, OutcomeKind::continuous, 0.2, {20, 22}, {8, 9});
    const LambdaGrid g = make_lambda_grid(2, 1.0, GridMode::grid);
    const KSelection ks = select_k_algorithmic(toy.data, 0.10, g, quick());
    const double at_k = ks.at_k.records[pick_best(ks.at_k.records)].bic;
    const double at_k1 = ks.at_k_plus_1.records[pick_best(ks.at_k_plus_1.records)].bic;
    CHECK(ks.K == (at_k <= at_k1 ? ks.simple_k : ks.simple_k + 1));
    CHECK(ks.simple_k == select_k_simple(toy.data, 0.10));
}

TEST_CASE("bootstrap draws keep subgroup sizes and partition the sample")
{
    Rng rng(9);
    const BootstrapSample b = draw_bootstrap({124, 92}, rng);
    CHECK(b.in_bag[0].size() == 124);
    CHECK(b.in_bag[1].size() == 92);
    for (int s = 0; s < 2; ++s) {
        const int n = s == 0 ? 124 : 92;
        std::set<int> in(b.in_bag[s].begin(), b.in_bag[s].end());
        std::set<int> out(b.out_of_bag[s].begin(), b.out_of_bag[s].end());
        CHECK(std::is_sorted(b.out_of_bag[s].begin(), b.out_of_bag[s].end()));
        for (int i = 0; i < n; ++i) CHECK(in.count(i) + out.count(i) == 1);
        CHECK(in.size() + out.size() == static_cast<std::size_t>(n));
    }
    const auto toy = make_toy(9, OutcomeKind::continuous, 0.1, {124, 92}, {3, 4});
    const MultiViewDataset r = resample(toy.data, b);
    CHECK(r.dims().n == std::vector<int>{124, 92});
    CHECK(r.x(1, 0).row(5) == toy.data.x(1, 0).row(b.in_bag[0][5]));
}

TEST_CASE("one bootstrap with top fraction 1 is that fit's support")
{
    const auto toy = make_toy(10, OutcomeKind::continuous, 0.3, {20, 22}, {8, 9});
    FitOptions o = quick();
    o.hyper.lambda_g = o.hyper.lambda_xi = 0.5;
    BootstrapOptions boot;
    boot.n_boot = 1;
    boot.top_fraction = {1.0};
    boot.seed = 4;
    const SelectionReport rep = bootstrap_stability(toy.data, o, boot);

    Rng rng(derive_seed(4, 0));
    const FactorModel single = fit(resample(toy.data, draw_bootstrap(toy.data.dims().n, rng)), o);
    const SelectionReport direct = selection_report(single);
    for (int d = 0; d < 2; ++d) {
        for (int s = 0; s < 2; ++s) {
            CHECK(rep.indices(d, s) == direct.indices(d, s));
            for (std::size_t i = 0; i < direct.selected[d][s].size(); ++i)
                CHECK(rep.selected[d][s][i].weight == doctest::Approx(direct.selected[d][s][i].weight));
        }
    }
}

TEST_CASE("stability keeps the most frequently selected variables")
{
    const auto toy = make_toy(11, OutcomeKind::continuous, 1.0, {20, 22}, {10, 9});
    FitOptions o = quick();
    o.hyper.lambda_g = o.hyper.lambda_xi = 1.5;
    BootstrapOptions boot;
    boot.n_boot = 6;
    boot.seed = 2;
    boot.top_fraction = {1.0};
    const SelectionReport all = bootstrap_stability(toy.data, o, boot);
    boot.top_fraction = {0.3, 0.2};
    boot.workers = 3;
    const SelectionReport top = bootstrap_stability(toy.data, o, boot);
    for (int d = 0; d < 2; ++d) {
        for (int s = 0; s < 2; ++s) {
            const auto& kept = top.selected[d][s];
            std::set<int> kept_idx;
            int min_kept = 1 << 30;
            for (const auto& v : kept) {
                kept_idx.insert(v.index);
                min_kept = std::min(min_kept, v.times_selected);
                CHECK(v.times_selected <= boot.n_boot);
            }
            for (const auto& v : all.selected[d][s]) {
                if (!kept_idx.count(v.index)) CHECK(v.times_selected < min_kept);
            }
        }
    }
    CHECK_THROWS_AS(bootstrap_stability(toy.data, o, BootstrapOptions{0, {0.5}}), Error);
    CHECK_THROWS_AS(bootstrap_stability(toy.data, o, BootstrapOptions{1, {1.5}}), Error);
}

TEST_CASE("selection report weights")
{
    const auto toy = make_toy(12);
    FactorModel m = zero_model(toy.data, 2);
    m.Xi[0][0](2, 0) = -0.5;
    m.Xi[0][0](2, 1) = 0.25;
    const SelectionReport r = selection_report(m);
    REQUIRE(r.selected[0][0].size() == 1);
    CHECK(r.selected[0][0][0].index == 2);
    CHECK(r.selected[0][0][0].weight == doctest::Approx(0.75));
    CHECK(r.selected[0][0][0].name == toy.data.variable_names()[0][2]);
    CHECK(r.common[0].empty());
}
