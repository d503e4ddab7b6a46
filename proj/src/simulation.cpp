#include <hip/simulation.hpp>
#include <hip/softmax.hpp>

namespace hip {

std::vector<int> SimScenario::dimensions() const
{
    switch (setting) {
    case Setting::p1: return {300, 350};
    case Setting::p2: return {1000, 1500};
    case Setting::p3: return {5000, 6000};
    case Setting::custom: return custom_p;
    }
    return {};
}

Matrix SimScenario::true_theta() const
{
    if (theta) return *theta;
    Matrix t(2, outcome == OutcomeKind::continuous ? 1 : 2);
    if (outcome == OutcomeKind::continuous) t << 1.0, 0.0;
    else t << 1.0, 0.5, 0.8, 0.2;
    return t;
}

void SimScenario::validate() const
{
    auto fail = [](const std::string& m) { throw Error(ErrorKind::invalid_argument, m); };
    const auto p = dimensions();
    if (p.empty()) fail("scenario needs at least one view");
    if (n.empty()) fail("scenario needs at least one subgroup");
    for (int ns : n)
        if (ns < 2) fail("subgroup sizes must be at least 2");
    if (K_true < 1 || K_true > n_signal) fail("K_true must lie in [1, n_signal]");
    const int S = static_cast<int>(n.size());
    const int span = overlap == Overlap::full ? n_signal : n_signal + (S - 1) * (n_signal / 2);
    for (int pd : p)
        if (pd < span) fail("every view needs at least " + std::to_string(span) + " variables for this scenario");
    if (sigma_x < 0.0 || sigma_y < 0.0) fail("noise scales must be nonnegative");
    const Matrix t = true_theta();
    if (t.rows() != K_true) fail("theta must have K_true rows");
    if (outcome == OutcomeKind::multiclass && t.cols() < 2) fail("multiclass theta needs at least two columns");
}

std::vector<int> signal_rows(const SimScenario& scenario, int s)
{
    const int offset = scenario.overlap == Overlap::full ? 0 : s * (scenario.n_signal / 2);
    std::vector<int> rows(static_cast<std::size_t>(scenario.n_signal));
    for (int i = 0; i < scenario.n_signal; ++i) rows[static_cast<std::size_t>(i)] = offset + i;
    return rows;
}

Matrix orthonormalize_columns(const Matrix& m)
{
    Matrix q = m;
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        for (Eigen::Index i = 0; i < j; ++i) q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
        const double norm = q.col(j).norm();
        if (norm > 0.0) q.col(j) /= norm;
    }
    return q;
}

GroundTruth generate_loadings(const SimScenario& scenario, Rng& rng)
{
    scenario.validate();
    const auto p = scenario.dimensions();
    const int D = static_cast<int>(p.size()), S = static_cast<int>(scenario.n.size());
    GroundTruth truth;
    truth.theta = scenario.true_theta();
    truth.B.assign(D, std::vector<Matrix>(S));
    truth.signal.assign(D, std::vector<std::vector<int>>(S));
    for (int d = 0; d < D; ++d) {
        for (int s = 0; s < S; ++s) {
            Matrix B = Matrix::Zero(p[d], scenario.K_true);
            const auto rows = signal_rows(scenario, s);
            for (int l : rows)
                for (int k = 0; k < scenario.K_true; ++k) B(l, k) = rng.uniform(0.5, 1.0);
            truth.B[d][s] = orthonormalize_columns(B);
            truth.signal[d][s] = rows;
        }
    }
    return truth;
}

namespace {

MultiViewDataset draw(const SimScenario& scenario, const GroundTruth& truth, Rng& rng, std::vector<Matrix>& z_out)
{
    const int D = static_cast<int>(truth.B.size()), S = static_cast<int>(scenario.n.size());
    std::vector<std::vector<Matrix>> views(D, std::vector<Matrix>(S));
    Outcome outcome;
    outcome.kind = scenario.outcome;
    z_out.clear();
    for (int s = 0; s < S; ++s) {
        const Matrix Z = rng.normal_matrix(scenario.n[s], scenario.K_true);
        for (int d = 0; d < D; ++d) {
            const Matrix& B = truth.B[d][s];
            views[d][s] = Z * B.transpose() + scenario.sigma_x * rng.normal_matrix(Z.rows(), B.rows());
        }
        const Matrix W = Z * truth.theta;
        if (scenario.outcome == OutcomeKind::continuous) {
            outcome.y.push_back(W + scenario.sigma_y * rng.normal_matrix(W.rows(), W.cols()));
        } else {
            std::vector<int> labels;
            if (scenario.stochastic_labels) {
                const Matrix A = row_softmax(W);
                for (Eigen::Index i = 0; i < A.rows(); ++i) {
                    double u = rng.uniform(), acc = 0.0;
                    int label = static_cast<int>(A.cols()) - 1;
                    for (Eigen::Index j = 0; j < A.cols(); ++j) {
                        acc += A(i, j);
                        if (u < acc) {
                            label = static_cast<int>(j);
                            break;
                        }
                    }
                    labels.push_back(label);
                }
            } else {
                labels = row_argmax(W);
            }
            outcome.y.push_back(onehot(labels, static_cast<int>(W.cols())));
        }
        z_out.push_back(Z);
    }
    return MultiViewDataset(std::move(views), std::move(outcome));
}

} // namespace

SimulatedData generate_dataset(const SimScenario& scenario)
{
    Rng rng(scenario.seed);
    SimulatedData out;
    out.truth = generate_loadings(scenario, rng);
    out.train = draw(scenario, out.truth, rng, out.z_train);
    out.test = draw(scenario, out.truth, rng, out.z_test);
    return out;
}

} // namespace hip
