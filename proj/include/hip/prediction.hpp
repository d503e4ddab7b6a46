#pragma once
#include <optional>
#include <hip/data.hpp>

namespace hip {

struct PredictionResult
{
    std::vector<Matrix> z;                    // [s], n_test,s x K
    std::vector<Matrix> y;                    // continuous, in original outcome units
    std::vector<Matrix> probabilities;        // multiclass
    std::vector<std::vector<int>> labels;     // multiclass, argmax with lowest-index ties
    std::vector<std::string> warnings;
};

/// Z_pred = X_cat B_cat (B_cat' B_cat + r I)^{-1} per subgroup, where
/// r = ridge_eps * trace(B_cat' B_cat) / K. The model's X standardizer is
/// applied to `test` first. `ridge_eps` defaults to the model's value.
std::vector<Matrix> predict_scores(const FactorModel& model, const MultiViewDataset& test,
                                   std::optional<double> ridge_eps = std::nullopt,
                                   std::vector<std::string>* warnings = nullptr);

/// Y = Z Theta (destandardized with the training outcome transform) or
/// softmax(Z Theta) with argmax labels.
PredictionResult predict_outcome(const FactorModel& model, const std::vector<Matrix>& z);

PredictionResult predict(const FactorModel& model, const MultiViewDataset& test,
                         std::optional<double> ridge_eps = std::nullopt);

} // namespace hip
