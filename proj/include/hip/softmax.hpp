#pragma once
#include <cmath>
#include <hip/data.hpp>

namespace hip {

/// Row-wise softmax, shifted by the row maximum so |w| in the thousands
/// stays finite.
template <class Derived>
MatrixX<typename Derived::Scalar> row_softmax(const Eigen::MatrixBase<Derived>& W)
{
    using Scalar = typename Derived::Scalar;
    const MatrixX<Scalar> Wm = W;  // product expressions must not be re-evaluated per row
    MatrixX<Scalar> A(W.rows(), W.cols());
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        const Scalar shift = Wm.row(i).maxCoeff();
        A.row(i) = (Wm.row(i).array() - shift).exp().matrix();
        A.row(i) /= A.row(i).sum();
    }
    return A;
}

/// -sum_ij y_ij log softmax(W)_ij, computed through log-sum-exp.
template <class DerivedY, class DerivedW>
typename DerivedW::Scalar cross_entropy(const Eigen::MatrixBase<DerivedY>& Y,
                                        const Eigen::MatrixBase<DerivedW>& W)
{
    using Scalar = typename DerivedW::Scalar;
    const MatrixX<Scalar> Wm = W;
    Scalar total(0);
    for (Eigen::Index i = 0; i < Wm.rows(); ++i) {
        const Scalar shift = Wm.row(i).maxCoeff();
        const Scalar lse = shift + std::log((Wm.row(i).array() - shift).exp().sum());
        for (Eigen::Index j = 0; j < Wm.cols(); ++j) {
            if (Y(i, j) != Scalar(0)) total -= Y(i, j) * (Wm(i, j) - lse);
        }
    }
    return total;
}

/// Index of the largest entry per row; ties go to the lowest index.
template <class Derived>
std::vector<int> row_argmax(const Eigen::MatrixBase<Derived>& A)
{
    const MatrixX<typename Derived::Scalar> Am = A;
    std::vector<int> labels(static_cast<std::size_t>(Am.rows()), 0);
    for (Eigen::Index i = 0; i < Am.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < Am.cols(); ++j) {
            if (Am(i, j) > Am(i, best)) best = j;
        }
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

} // namespace hip
