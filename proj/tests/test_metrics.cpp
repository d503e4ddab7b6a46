#include <numeric>
#include <doctest.h>
#include <hip/metrics.hpp>
#include <hip/random.hpp>

using namespace hip;

namespace {

std::vector<int> range(int a, int b)
{
    std::vector<int> v(static_cast<std::size_t>(b - a));
    std::iota(v.begin(), v.end(), a);
    return v;
}

} // namespace

TEST_CASE("selection scores")
{
    const SelectionScore exact = score_selection(range(0, 50), range(0, 50), 300);
    CHECK(exact.tpr == 1.0);
    CHECK(exact.fpr == 0.0);
    CHECK(exact.f1 == 1.0);

    // TP 25, FP 25, FN 25
    const SelectionScore half = score_selection(range(25, 75), range(0, 50), 300);
    CHECK(half.tp == 25);
    CHECK(half.fp == 25);
    CHECK(half.fn == 25);
    CHECK(half.f1 == doctest::Approx(0.5));

    const SelectionScore none = score_selection({}, range(0, 50), 300);
    CHECK(none.tpr == 0.0);
    CHECK(none.fpr == 0.0);
    CHECK(none.f1 == 0.0);
}

TEST_CASE("degenerate denominators")
{
    CHECK(score_selection({}, {}, 10).tpr == 1.0);
    CHECK(score_selection({}, {}, 10).f1 == 1.0);
    CHECK(score_selection(range(0, 10), range(0, 10), 10).fpr == 0.0);
    CHECK_THROWS_AS(score_selection({10}, {}, 10), Error);
}

TEST_CASE("scores agree with a direct confusion count")
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 5 + static_cast<int>(rng.below(30));
        std::vector<int> sel, tru;
        std::vector<char> s(static_cast<std::size_t>(p)), t(static_cast<std::size_t>(p));
        for (int i = 0; i < p; ++i) {
            if (rng.uniform() < 0.4) sel.push_back(i), s[static_cast<std::size_t>(i)] = 1;
            if (rng.uniform() < 0.3) tru.push_back(i), t[static_cast<std::size_t>(i)] = 1;
        }
        int tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            tp += s[i] && t[i];
            fp += s[i] && !t[i];
            tn += !s[i] && !t[i];
            fn += !s[i] && t[i];
        }
        const SelectionScore sc = score_selection(sel, tru, p);
        CHECK(sc.tp == tp);
        CHECK(sc.fp == fp);
        CHECK(sc.tn == tn);
        CHECK(sc.fn == fn);
        CHECK(sc.tp + sc.fn == static_cast<int>(tru.size()));
        CHECK(sc.fp + sc.tn == p - static_cast<int>(tru.size()));
        if (tn + fp > 0) CHECK(sc.fpr + double(tn) / (tn + fp) == doctest::Approx(1.0));
        for (double r : {sc.tpr, sc.fpr, sc.f1}) {
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
        if (!tru.empty()) CHECK((sc.f1 == 0.0) == (tp == 0));
        CHECK((sc.f1 == 1.0) == (sel == tru));
    }
}

TEST_CASE("test mse")
{
    Vector a(3), b(3);
    a << 0, 1, 5;
    b << 0, 1, 2;
    CHECK(test_mse(a, a) == 0.0);
    CHECK(test_mse(a, b) == doctest::Approx(3.0));
    CHECK(test_mse(b + 2 * (a - b), b) == doctest::Approx(4 * test_mse(a, b)));
    CHECK_THROWS_AS(test_mse(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), Error);
}

TEST_CASE("mse ignores the order of entries")
{
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        Vector p = rng.normal_matrix(12, 1), o = rng.normal_matrix(12, 1);
        std::vector<int> perm(12);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Vector pp(12), oo(12);
        for (int i = 0; i < 12; ++i) {
            pp(i) = p(perm[static_cast<std::size_t>(i)]);
            oo(i) = o(perm[static_cast<std::size_t>(i)]);
        }
        CHECK(test_mse(pp, oo) == doctest::Approx(test_mse(p, o)).epsilon(1e-14));
    }
}

TEST_CASE("accuracy")
{
    CHECK(accuracy({1, 0, 2}, {1, 0, 2}) == 1.0);
    CHECK(accuracy({1, 1}, {0, 0}) == 0.0);
    CHECK(accuracy({1, 0, 1, 1}, {1, 0, 1, 0}) == 0.75);
    CHECK_THROWS_AS(accuracy({1}, {1, 0}), Error);
}
