#include <hip/prediction.hpp>
#include <hip/softmax.hpp>

namespace hip {

std::vector<Matrix> predict_scores(const FactorModel& model, const MultiViewDataset& test,
                                   std::optional<double> ridge_eps, std::vector<std::string>* warnings)
{
    const int D = model.num_views(), S = model.num_subgroups(), K = model.components();
    if (test.num_views() != D || test.num_subgroups() != S) {
        throw Error(ErrorKind::data, "test data must have the training view and subgroup layout");
    }
    for (int d = 0; d < D; ++d) {
        if (test.dims().p[d] != model.G[d].rows()) {
            throw Error(ErrorKind::data, "view " + test.view_names()[d] + " has " + std::to_string(test.dims().p[d])
                                             + " variables, model expects " + std::to_string(model.G[d].rows()));
        }
    }
    const double relative = ridge_eps.value_or(model.hyper.ridge_eps);

    std::vector<Matrix> scores;
    for (int s = 0; s < S; ++s) {
        const Matrix B = model.concatenated_loading(s);
        Matrix X(test.dims().n[s], B.rows());
        Eigen::Index col = 0;
        for (int d = 0; d < D; ++d) {
            X.middleCols(col, model.G[d].rows()) = model.standardizer.apply_x(d, s, test.x(d, s));
            col += model.G[d].rows();
        }
        const Matrix gram = B.transpose() * B;
        const double trace = gram.trace();
        if (trace <= 0.0) {
            if (warnings) warnings->push_back("all loadings of subgroup " + std::to_string(s) + " are zero; scores set to 0");
            scores.push_back(Matrix::Zero(X.rows(), K));
            continue;
        }
        const Matrix system = gram + relative * trace / K * Matrix::Identity(K, K);
        // Z' = system^{-1} B' X'
        scores.push_back(system.ldlt().solve(B.transpose() * X.transpose()).transpose());
    }
    return scores;
}

PredictionResult predict_outcome(const FactorModel& model, const std::vector<Matrix>& z)
{
    PredictionResult out;
    out.z = z;
    for (std::size_t s = 0; s < z.size(); ++s) {
        if (z[s].cols() != model.components()) throw Error(ErrorKind::data, "score matrix must have K columns");
        const Matrix W = z[s] * model.Theta;
        if (model.outcome == OutcomeKind::continuous) {
            out.y.push_back(model.standardizer.invert_y(static_cast<int>(s), W));
        } else {
            Matrix A = row_softmax(W);
            out.labels.push_back(row_argmax(A));
            out.probabilities.push_back(std::move(A));
        }
    }
    return out;
}

PredictionResult predict(const FactorModel& model, const MultiViewDataset& test, std::optional<double> ridge_eps)
{
    std::vector<std::string> warnings;
    PredictionResult out = predict_outcome(model, predict_scores(model, test, ridge_eps, &warnings));
    out.warnings = std::move(warnings);
    return out;
}

} // namespace hip
