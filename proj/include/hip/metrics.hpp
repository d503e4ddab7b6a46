#pragma once
#include <algorithm>
#include <vector>
#include <hip/data.hpp>

namespace hip {

struct SelectionScore
{
    int tp = 0, fp = 0, tn = 0, fn = 0;
    double tpr = 0.0, fpr = 0.0, f1 = 0.0;
};

/// TPR, FPR and F1 of a selected index set against the true set over p
/// variables. Empty denominators follow the vacuous-success convention:
/// TPR = 1 with empty truth, FPR = 0 when every variable is true, F1 = 1 when
/// TP = FP = FN = 0.
inline SelectionScore score_selection(const std::vector<int>& selected,
                                      const std::vector<int>& truth, int p)
{
    std::vector<char> sel(static_cast<std::size_t>(p), 0), tru(static_cast<std::size_t>(p), 0);
    auto mark = [p](const std::vector<int>& idx, std::vector<char>& flags) {
        for (int i : idx) {
            if (i < 0 || i >= p) throw Error(ErrorKind::invalid_argument, "score_selection: index out of range");
            flags[static_cast<std::size_t>(i)] = 1;
        }
    };
    mark(selected, sel);
    mark(truth, tru);

    SelectionScore s;
    for (std::size_t i = 0; i < sel.size(); ++i) {
        if (sel[i] && tru[i]) ++s.tp;
        else if (sel[i]) ++s.fp;
        else if (tru[i]) ++s.fn;
        else ++s.tn;
    }
    s.tpr = (s.tp + s.fn) > 0 ? double(s.tp) / (s.tp + s.fn) : 1.0;
    s.fpr = (s.tn + s.fp) > 0 ? double(s.fp) / (s.tn + s.fp) : 0.0;
    const double denom = s.tp + 0.5 * (s.fp + s.fn);
    s.f1 = denom > 0 ? s.tp / denom : 1.0;
    return s;
}

/// Mean of squared element-wise differences.
template <class DerivedA, class DerivedB>
double test_mse(const Eigen::MatrixBase<DerivedA>& pred, const Eigen::MatrixBase<DerivedB>& obs)
{
    if (pred.rows() != obs.rows() || pred.cols() != obs.cols()) {
        throw Error(ErrorKind::invalid_argument, "test_mse: shape mismatch");
    }
    if (pred.size() == 0) return 0.0;
    return static_cast<double>((pred - obs).squaredNorm()) / static_cast<double>(pred.size());
}

inline double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth)
{
    if (predicted.size() != truth.size()) {
        throw Error(ErrorKind::invalid_argument, "accuracy: length mismatch");
    }
    if (truth.empty()) return 1.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return double(hits) / double(truth.size());
}

} // namespace hip
