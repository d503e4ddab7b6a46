#include <set>
#include <doctest.h>
#include <hip/simulation.hpp>
#include <hip/solver.hpp>

using namespace hip;

TEST_CASE("preset dimensions")
{
    SimScenario sc;
    CHECK(sc.dimensions() == std::vector<int>{300, 350});
    sc.setting = Setting::p2;
    CHECK(sc.dimensions() == std::vector<int>{1000, 1500});
    sc.setting = Setting::p3;
    CHECK(sc.dimensions() == std::vector<int>{5000, 6000});
    sc.setting = Setting::custom;
    sc.custom_p = {40, 50};
    CHECK(sc.dimensions() == std::vector<int>{40, 50});
}

TEST_CASE("signal rows")
{
    SimScenario sc;
    const auto full = signal_rows(sc, 1);
    CHECK(full.front() == 0);
    CHECK(full.back() == 49);
    sc.overlap = Overlap::partial;
    const auto a = signal_rows(sc, 0), b = signal_rows(sc, 1);
    CHECK(b.front() == 25);
    CHECK(b.back() == 74);
    std::set<int> common;
    for (int i : a)
        if (std::find(b.begin(), b.end(), i) != b.end()) common.insert(i);
    CHECK(common.size() == 25);
}

TEST_CASE("loadings")
{
    SimScenario sc;
    Rng rng(1);
    const GroundTruth t = generate_loadings(sc, rng);
    const Matrix& B = t.B[0][0];
    CHECK(B.rows() == 300);
    CHECK(B.cols() == 2);
    CHECK(support(B, 0.0).size() == 50);
    CHECK(B.bottomRows(250).isZero(0));
    CHECK(std::abs(B.col(0).dot(B.col(1))) <= 1e-8);
    CHECK(t.signal[1][1].size() == 50);
    CHECK(t.B[0][0] != t.B[0][1]);  // drawn per subgroup

    SUBCASE("orthonormalization keeps zero rows zero")
    {
        Matrix m = rng.uniform_matrix(6, 3, 0.5, 1.0);
        m.row(2).setZero();
        const Matrix q = orthonormalize_columns(m);
        CHECK(q.row(2).isZero(0));
        CHECK((q.transpose() * q - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("dataset shapes and reproducibility")
{
    SimScenario sc;
    sc.seed = 5;
    const SimulatedData a = generate_dataset(sc);
    CHECK(a.train.x(0, 0).rows() == 250);
    CHECK(a.train.x(0, 0).cols() == 300);
    CHECK(a.train.x(1, 1).rows() == 260);
    CHECK(a.train.x(1, 1).cols() == 350);
    CHECK(a.test.x(1, 1).rows() == 260);
    CHECK(a.train.x(0, 0) != a.test.x(0, 0));
    const SimulatedData b = generate_dataset(sc);
    CHECK(a.train.x(1, 0) == b.train.x(1, 0));
    CHECK(a.test.y(1) == b.test.y(1));
    CHECK(sc.true_theta() == (Matrix(2, 1) << 1, 0).finished());
}

TEST_CASE("noiseless views are exactly Z B'")
{
    SimScenario sc;
    sc.setting = Setting::custom;
    sc.custom_p = {60, 70};
    sc.sigma_x = 0.0;
    sc.seed = 2;
    const SimulatedData d = generate_dataset(sc);
    for (int v = 0; v < 2; ++v)
        for (int s = 0; s < 2; ++s)
            CHECK(d.train.x(v, s) == d.z_train[s] * d.truth.B[v][s].transpose());
}

TEST_CASE("latent scores look standard normal")
{
    SimScenario sc;
    sc.seed = 3;
    const SimulatedData d = generate_dataset(sc);
    for (const Matrix& z : d.z_train) {
        const double n = static_cast<double>(z.size());
        const double mean = z.mean();
        const double var = (z.array() - mean).square().sum() / (n - 1);
        CHECK(std::abs(mean) <= 5.0 / std::sqrt(n));
        CHECK(std::abs(var - 1.0) <= 5.0 * std::sqrt(2.0 / n));
    }
}

TEST_CASE("multiclass labels use both classes")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SimScenario sc;
        sc.outcome = OutcomeKind::multiclass;
        sc.seed = seed;
        const SimulatedData d = generate_dataset(sc);
        for (int s = 0; s < 2; ++s) {
            const Matrix& y = d.train.y(s);
            CHECK(y.cols() == 2);
            const double share = y.col(0).mean();
            CHECK(share >= 0.1);
            CHECK(share <= 0.9);
        }
    }
}

TEST_CASE("scenario validation")
{
    SimScenario sc;
    sc.setting = Setting::custom;
    sc.custom_p = {30, 60};
    CHECK_THROWS_AS(sc.validate(), Error);
    sc.custom_p = {60, 60};
    sc.overlap = Overlap::partial;
    CHECK_THROWS_AS(sc.validate(), Error);  // needs 75 rows
    sc.custom_p = {80, 80};
    CHECK_NOTHROW(sc.validate());
    sc.sigma_x = -1;
    CHECK_THROWS_AS(sc.validate(), Error);
}
