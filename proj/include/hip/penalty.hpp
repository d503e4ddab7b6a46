#pragma once
#include <cmath>
#include <vector>
#include <hip/data.hpp>

namespace hip {

/// Row-block (l2,1) penalty weights and per-view penalty indicators.
struct PenaltyConfig
{
    double lambda_g = 0.0;
    double lambda_xi = 0.0;
    std::vector<int> gamma;
};

/// Element-wise product of a row of G and a row of Xi.
template <class DerivedG, class DerivedXi>
auto compose(const Eigen::MatrixBase<DerivedG>& g, const Eigen::MatrixBase<DerivedXi>& xi)
{
    if (g.rows() != xi.rows() || g.cols() != xi.cols()) {
        throw Error(ErrorKind::invalid_argument, "compose: length mismatch");
    }
    return g.cwiseProduct(xi).eval();
}

/// sum_l ||v_l||_2 over the rows of V.
template <class Derived>
typename Derived::Scalar row_norm_sum(const Eigen::MatrixBase<Derived>& V)
{
    if (V.rows() == 0) return typename Derived::Scalar(0);
    return V.rowwise().norm().sum();
}

/// Penalty of the hierarchical decomposition:
/// sum_d gamma_d [ lambda_G sum_l ||g_l^d|| + lambda_xi sum_s sum_l ||xi_l^{d,s}|| ].
inline double penalty_value(const std::vector<Matrix>& G,
                            const std::vector<std::vector<Matrix>>& Xi,
                            const PenaltyConfig& cfg)
{
    if (Xi.size() != G.size() || cfg.gamma.size() != G.size()) {
        throw Error(ErrorKind::invalid_argument, "penalty_value: view count mismatch");
    }
    double total = 0.0;
    for (std::size_t d = 0; d < G.size(); ++d) {
        if (cfg.gamma[d] == 0) continue;
        double view = cfg.lambda_g * row_norm_sum(G[d]);
        for (const auto& xi : Xi[d]) {
            if (xi.rows() != G[d].rows() || xi.cols() != G[d].cols()) {
                throw Error(ErrorKind::invalid_argument, "penalty_value: shape mismatch");
            }
            view += cfg.lambda_xi * row_norm_sum(xi);
        }
        total += view;
    }
    return total;
}

/// Proximal operator of threshold * sum_l ||v_l||_2: row-wise group soft
/// thresholding. Rows with norm <= threshold become exactly zero.
template <class Derived>
MatrixX<typename Derived::Scalar>
prox_block_l21(const Eigen::MatrixBase<Derived>& V, typename Derived::Scalar threshold)
{
    using Scalar = typename Derived::Scalar;
    MatrixX<Scalar> out = V;
    if (threshold <= Scalar(0)) return out;
    for (Eigen::Index l = 0; l < out.rows(); ++l) {
        const Scalar norm = out.row(l).norm();
        if (norm <= threshold) {
            out.row(l).setZero();
        } else {
            out.row(l) *= Scalar(1) - threshold / norm;
        }
    }
    return out;
}

/// Indices of rows with max_k |B_lk| > zero_tol, ascending.
template <class Derived>
std::vector<int> support(const Eigen::MatrixBase<Derived>& B, typename Derived::Scalar zero_tol)
{
    std::vector<int> rows;
    for (Eigen::Index l = 0; l < B.rows(); ++l) {
        if (B.cols() > 0 && B.row(l).cwiseAbs().maxCoeff() > zero_tol) {
            rows.push_back(static_cast<int>(l));
        }
    }
    return rows;
}

inline constexpr double kZeroTol = 1e-7;

} // namespace hip
