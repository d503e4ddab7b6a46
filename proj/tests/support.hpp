#pragma once
#include <functional>
#include <hip/random.hpp>
#include <hip/simulation.hpp>
#include <hip/solver.hpp>

namespace hip::test {

// Small dataset built from known Z, B and Theta so tests can reason about the
// truth. Loadings have `signal` nonzero rows per view.
struct Toy
{
    MultiViewDataset data;
    std::vector<Matrix> Z;
    std::vector<std::vector<Matrix>> B;
    Matrix Theta;
};

inline Toy make_toy(std::uint64_t seed, OutcomeKind kind = OutcomeKind::continuous, double noise = 0.1,
                    std::vector<int> n = {12, 14}, std::vector<int> p = {6, 7}, int K = 2, int classes = 3)
{
    Rng rng(seed);
    Toy t;
    const std::size_t D = p.size(), S = n.size();
    t.B.assign(D, std::vector<Matrix>(S));
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t s = 0; s < S; ++s) t.B[d][s] = rng.normal_matrix(p[d], K);
    std::vector<std::vector<Matrix>> views(D, std::vector<Matrix>(S));
    Outcome outcome;
    outcome.kind = kind;
    t.Theta = kind == OutcomeKind::continuous ? rng.normal_matrix(K, 1) : rng.normal_matrix(K, classes);
    for (std::size_t s = 0; s < S; ++s) {
        t.Z.push_back(rng.normal_matrix(n[s], K));
        for (std::size_t d = 0; d < D; ++d)
            views[d][s] = t.Z[s] * t.B[d][s].transpose() + noise * rng.normal_matrix(n[s], p[d]);
        const Matrix W = t.Z[s] * t.Theta;
        if (kind == OutcomeKind::continuous) {
            outcome.y.push_back(W + noise * rng.normal_matrix(n[s], 1));
        } else {
            std::vector<int> labels(static_cast<std::size_t>(n[s]));
            for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
            outcome.y.push_back(onehot(labels, classes));
        }
    }
    t.data = MultiViewDataset(std::move(views), std::move(outcome));
    return t;
}

// A model with random (not fitted) parameters, for gradient checks.
inline FactorModel random_model(const MultiViewDataset& data, int K, std::uint64_t seed)
{
    Rng rng(seed);
    FactorModel m = initialize(data, K, seed);
    for (auto& g : m.G) g = rng.normal_matrix(g.rows(), g.cols());
    for (auto& view : m.Xi)
        for (auto& xi : view) xi = rng.normal_matrix(xi.rows(), xi.cols());
    for (auto& z : m.Z) z = rng.normal_matrix(z.rows(), z.cols());
    m.Theta = rng.normal_matrix(m.Theta.rows(), m.Theta.cols());
    return m;
}

// Central differences of f with respect to every entry of `x`.
inline Matrix finite_difference(Matrix& x, const std::function<double()>& f, double h = 1e-6)
{
    Matrix g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double keep = x(i, j);
            x(i, j) = keep + h;
            const double up = f();
            x(i, j) = keep - h;
            const double down = f();
            x(i, j) = keep;
            g(i, j) = (up - down) / (2.0 * h);
        }
    }
    return g;
}

inline double relative_error(const Matrix& a, const Matrix& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-12);
}

// Normal equations for min_Xi ||X - Z (G o Xi)'||^2: each row of Xi solves
// (D Z'Z D) xi = D Z' x_l with D = diag(g_l).
inline Matrix xi_normal_equations(const Matrix& X, const Matrix& Z, const Matrix& G)
{
    Matrix out(G.rows(), G.cols());
    for (Eigen::Index l = 0; l < G.rows(); ++l) {
        const Matrix D = G.row(l).transpose().asDiagonal();
        const Matrix A = D * Z.transpose() * Z * D;
        const Vector b = D * Z.transpose() * X.col(l);
        out.row(l) = A.ldlt().solve(b).transpose();
    }
    return out;
}

// prox of t * ||.||_2 at v by golden-section search on the radius
// min_a 0.5 (a - |v|)^2 + t a over [0, |v|]; the minimizer points along v.
inline Matrix prox_oracle(const Matrix& v, double t)
{
    const double r = v.norm();
    if (r == 0.0) return v;
    auto h = [&](double a) { return 0.5 * (a - r) * (a - r) + t * a; };
    double lo = 0.0, hi = r;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 200; ++it) {
        const double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        if (h(a) < h(b)) hi = b;
        else lo = a;
    }
    return 0.5 * (lo + hi) * v / r;
}

// Noise-free data from the simulation design. Z is not centered, so the
// outcome is left unstandardized to keep the instance exactly representable.
inline MultiViewDataset noiseless_instance(std::uint64_t seed)
{
    SimScenario sc;
    sc.setting = Setting::custom;
    sc.custom_p = {60, 70};
    sc.n = {80, 90};
    sc.sigma_x = 0.0;
    sc.sigma_y = 0.0;
    sc.seed = seed;
    return generate_dataset(sc).train;
}

// Subgroup scores are only tied together through the shared Theta, so the
// last digits take many sweeps; the cap, not the answer, is what changes.
inline FitOptions noiseless_options()
{
    FitOptions o;
    o.standardize.y = false;
    o.hyper.max_outer_iters = 20000;
    o.hyper.eps_outer = 1e-14;
    return o;
}

} // namespace hip::test
