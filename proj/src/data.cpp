#include <algorithm>
#include <cmath>
#include <numeric>
#include <hip/data.hpp>

namespace hip {

namespace {

void require(bool ok, const std::string& message)
{
    if (!ok) throw Error(ErrorKind::data, message);
}

} // namespace

int Dimensions::total_p() const
{
    return std::accumulate(p.begin(), p.end(), 0);
}

MultiViewDataset::MultiViewDataset(std::vector<std::vector<Matrix>> views,
                                   Outcome outcome,
                                   std::vector<int> gamma,
                                   std::vector<std::vector<std::string>> variable_names,
                                   std::vector<std::string> subgroup_names,
                                   std::vector<std::string> view_names)
    : views_(std::move(views)),
      outcome_(std::move(outcome)),
      gamma_(std::move(gamma)),
      variable_names_(std::move(variable_names)),
      subgroup_names_(std::move(subgroup_names)),
      view_names_(std::move(view_names))
{
    const int D = static_cast<int>(views_.size());
    require(D >= 1, "dataset needs at least one view");
    const int S = static_cast<int>(views_[0].size());
    require(S >= 1, "dataset needs at least one subgroup");

    dims_.views = D;
    dims_.subgroups = S;
    dims_.outcome = outcome_.kind;
    dims_.n.resize(S);
    dims_.p.resize(D);

    for (int d = 0; d < D; ++d) {
        require(static_cast<int>(views_[d].size()) == S, "every view needs one block per subgroup");
        dims_.p[d] = static_cast<int>(views_[d][0].cols());
        require(dims_.p[d] >= 1, "view " + std::to_string(d) + " has no variables");
    }
    for (int s = 0; s < S; ++s) {
        dims_.n[s] = static_cast<int>(views_[0][s].rows());
        require(dims_.n[s] >= 1, "subgroup " + std::to_string(s) + " has no samples");
        for (int d = 0; d < D; ++d) {
            const Matrix& x = views_[d][s];
            require(x.rows() == dims_.n[s] && x.cols() == dims_.p[d],
                    "X(" + std::to_string(d) + "," + std::to_string(s) + ") has shape "
                        + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) + ", expected "
                        + std::to_string(dims_.n[s]) + "x" + std::to_string(dims_.p[d]));
            require(x.allFinite(), "X(" + std::to_string(d) + "," + std::to_string(s) + ") has missing or non-finite values");
        }
    }
    dims_.total_n = std::accumulate(dims_.n.begin(), dims_.n.end(), 0);

    if (outcome_.present()) {
        require(static_cast<int>(outcome_.y.size()) == S, "outcome needs one block per subgroup");
        const auto cols = outcome_.y[0].cols();
        for (int s = 0; s < S; ++s) {
            const Matrix& y = outcome_.y[s];
            require(y.rows() == dims_.n[s] && y.cols() == cols, "outcome block " + std::to_string(s) + " has the wrong shape");
            require(y.allFinite(), "outcome has missing or non-finite values");
        }
        if (outcome_.kind == OutcomeKind::continuous) {
            require(cols >= 1, "continuous outcome needs at least one column");
            dims_.q = static_cast<int>(cols);
        } else {
            require(cols >= 2, "multiclass outcome needs at least two classes");
            dims_.m = static_cast<int>(cols);
            for (int s = 0; s < S; ++s) {
                const Matrix& y = outcome_.y[s];
                for (Eigen::Index i = 0; i < y.rows(); ++i) {
                    int ones = 0;
                    for (Eigen::Index j = 0; j < y.cols(); ++j) {
                        require(y(i, j) == 0.0 || y(i, j) == 1.0, "multiclass outcome must be a 0/1 indicator matrix");
                        ones += y(i, j) == 1.0;
                    }
                    require(ones == 1, "multiclass outcome row " + std::to_string(i) + " of subgroup "
                                           + std::to_string(s) + " is not one-hot");
                }
            }
        }
        if (outcome_.names.empty()) {
            const std::string stem = outcome_.kind == OutcomeKind::continuous ? "y" : "class";
            for (Eigen::Index j = 0; j < cols; ++j) outcome_.names.push_back(stem + std::to_string(j + 1));
        }
        require(static_cast<Eigen::Index>(outcome_.names.size()) == cols, "outcome name count mismatch");
    } else if (!outcome_.names.empty()) {
        if (outcome_.kind == OutcomeKind::continuous) dims_.q = static_cast<int>(outcome_.names.size());
        else dims_.m = static_cast<int>(outcome_.names.size());
    }

    if (gamma_.empty()) gamma_.assign(D, 1);
    require(static_cast<int>(gamma_.size()) == D, "gamma needs one flag per view");
    for (int g : gamma_) require(g == 0 || g == 1, "gamma flags must be 0 or 1");

    if (view_names_.empty())
        for (int d = 0; d < D; ++d) view_names_.push_back("view" + std::to_string(d + 1));
    if (subgroup_names_.empty())
        for (int s = 0; s < S; ++s) subgroup_names_.push_back("subgroup" + std::to_string(s + 1));
    require(static_cast<int>(view_names_.size()) == D, "view name count mismatch");
    require(static_cast<int>(subgroup_names_.size()) == S, "subgroup name count mismatch");

    if (variable_names_.empty()) {
        variable_names_.resize(D);
        for (int d = 0; d < D; ++d)
            for (int l = 0; l < dims_.p[d]; ++l)
                variable_names_[d].push_back(view_names_[d] + "_" + std::to_string(l + 1));
    }
    require(static_cast<int>(variable_names_.size()) == D, "variable names needed for every view");
    for (int d = 0; d < D; ++d) {
        require(static_cast<int>(variable_names_[d].size()) == dims_.p[d],
                "variable_names[" + std::to_string(d) + "] must have p_d entries");
    }
}

Matrix MultiViewDataset::concatenated(int s) const
{
    Matrix out(dims_.n[s], dims_.total_p());
    Eigen::Index col = 0;
    for (int d = 0; d < dims_.views; ++d) {
        out.middleCols(col, dims_.p[d]) = views_[d][s];
        col += dims_.p[d];
    }
    return out;
}

Matrix MultiViewDataset::concatenated() const
{
    Matrix out(dims_.total_n, dims_.total_p());
    Eigen::Index row = 0;
    for (int s = 0; s < dims_.subgroups; ++s) {
        out.middleRows(row, dims_.n[s]) = concatenated(s);
        row += dims_.n[s];
    }
    return out;
}

Matrix MultiViewDataset::stacked_outcome() const
{
    if (!outcome_.present()) throw Error(ErrorKind::data, "dataset has no outcome");
    Matrix out(dims_.total_n, outcome_.y[0].cols());
    Eigen::Index row = 0;
    for (int s = 0; s < dims_.subgroups; ++s) {
        out.middleRows(row, dims_.n[s]) = outcome_.y[s];
        row += dims_.n[s];
    }
    return out;
}

MultiViewDataset MultiViewDataset::with_data(std::vector<std::vector<Matrix>> views, std::vector<Matrix> y) const
{
    Outcome out = outcome_;
    out.y = std::move(y);
    return MultiViewDataset(std::move(views), std::move(out), gamma_, variable_names_, subgroup_names_, view_names_);
}

std::vector<int> labels_from_onehot(const Matrix& y)
{
    std::vector<int> labels(static_cast<std::size_t>(y.rows()));
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        Eigen::Index j;
        y.row(i).maxCoeff(&j);
        labels[static_cast<std::size_t>(i)] = static_cast<int>(j);
    }
    return labels;
}

Matrix onehot(const std::vector<int>& labels, int classes)
{
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes) throw Error(ErrorKind::data, "class label out of range");
        y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return y;
}

// ---------------------------------------------------------------------------

ColumnTransform fit_columns(const Matrix& m, std::vector<int>* constant_columns)
{
    ColumnTransform t;
    t.mean = m.colwise().mean().transpose();
    t.scale = Vector::Ones(m.cols());
    if (m.rows() < 2) return t;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double ss = (m.col(j).array() - t.mean(j)).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(m.rows() - 1));
        const double magnitude = std::max(1.0, std::abs(t.mean(j)));
        if (sd > 1e-12 * magnitude) {
            t.scale(j) = sd;
        } else if (constant_columns) {
            constant_columns->push_back(static_cast<int>(j));
        }
    }
    return t;
}

Matrix apply_columns(const ColumnTransform& t, const Matrix& m)
{
    return (m.rowwise() - t.mean.transpose()).array().rowwise() / t.scale.transpose().array();
}

Matrix invert_columns(const ColumnTransform& t, const Matrix& m)
{
    Matrix out = m.array().rowwise() * t.scale.transpose().array();
    return out.rowwise() + t.mean.transpose();
}

Matrix Standardizer::apply_x(int d, int s, const Matrix& m) const
{
    return transforms_x() ? apply_columns(x[d][s], m) : m;
}

Matrix Standardizer::apply_y(int s, const Matrix& m) const
{
    return transforms_y() ? apply_columns(y[s], m) : m;
}

Matrix Standardizer::invert_y(int s, const Matrix& m) const
{
    return transforms_y() ? invert_columns(y[s], m) : m;
}

MultiViewDataset Standardizer::apply(const MultiViewDataset& data) const
{
    const int D = data.num_views(), S = data.num_subgroups();
    auto views = data.views();
    if (transforms_x()) {
        for (int d = 0; d < D; ++d)
            for (int s = 0; s < S; ++s) views[d][s] = apply_columns(x[d][s], views[d][s]);
    }
    std::vector<Matrix> ys = data.outcome().y;
    if (transforms_y() && data.outcome().present()) {
        for (int s = 0; s < S; ++s) ys[s] = apply_columns(y[s], ys[s]);
    }
    return data.with_data(std::move(views), std::move(ys));
}

MultiViewDataset Standardizer::invert(const MultiViewDataset& data) const
{
    const int D = data.num_views(), S = data.num_subgroups();
    auto views = data.views();
    if (transforms_x()) {
        for (int d = 0; d < D; ++d)
            for (int s = 0; s < S; ++s) views[d][s] = invert_columns(x[d][s], views[d][s]);
    }
    std::vector<Matrix> ys = data.outcome().y;
    if (transforms_y() && data.outcome().present()) {
        for (int s = 0; s < S; ++s) ys[s] = invert_columns(y[s], ys[s]);
    }
    return data.with_data(std::move(views), std::move(ys));
}

Standardized standardize(const MultiViewDataset& data, StandardizeOptions options)
{
    const int D = data.num_views(), S = data.num_subgroups();
    Standardizer t;
    auto warn_constant = [&t](const std::string& what, const std::vector<int>& cols) {
        for (int c : cols) {
            t.warnings.push_back(what + " column " + std::to_string(c) + " is constant; centered only");
        }
    };
    if (options.x) {
        t.x.assign(D, std::vector<ColumnTransform>(S));
        for (int d = 0; d < D; ++d) {
            for (int s = 0; s < S; ++s) {
                std::vector<int> constant;
                t.x[d][s] = fit_columns(data.x(d, s), &constant);
                warn_constant("X(" + data.view_names()[d] + "," + data.subgroup_names()[s] + ")", constant);
            }
        }
    }
    if (options.y && data.outcome().present() && data.outcome().kind == OutcomeKind::continuous) {
        t.y.resize(S);
        for (int s = 0; s < S; ++s) {
            std::vector<int> constant;
            t.y[s] = fit_columns(data.y(s), &constant);
            warn_constant("Y(" + data.subgroup_names()[s] + ")", constant);
        }
    }
    MultiViewDataset out = t.apply(data);
    return {std::move(out), std::move(t)};
}

// ---------------------------------------------------------------------------

void Hyperparameters::validate() const
{
    auto fail = [](const std::string& m) { throw Error(ErrorKind::invalid_argument, m); };
    if (!(lambda_g >= 0.0) || !(lambda_xi >= 0.0)) fail("lambda values must be nonnegative");
    if (K < 1) fail("K must be at least 1");
    if (!(eps_outer > 0.0) || !(eps_inner > 0.0)) fail("tolerances must be positive");
    if (max_outer_iters < 1 || max_inner_iters < 1) fail("iteration caps must be at least 1");
    if (!(ridge_eps >= 0.0)) fail("ridge_eps must be nonnegative");
}

const char* to_string(FitStatus status)
{
    switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_iterations: return "max_iterations";
    case FitStatus::diverged: return "diverged";
    }
    return "unknown";
}

Matrix FactorModel::concatenated_loading(int s) const
{
    Eigen::Index rows = 0;
    for (const auto& g : G) rows += g.rows();
    Matrix out(rows, components());
    Eigen::Index row = 0;
    for (int d = 0; d < num_views(); ++d) {
        out.middleRows(row, G[d].rows()) = loading(d, s);
        row += G[d].rows();
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<int> SelectionReport::indices(int d, int s) const
{
    std::vector<int> out;
    for (const auto& v : selected[d][s]) out.push_back(v.index);
    return out;
}

void SelectionReport::classify()
{
    const std::size_t D = selected.size();
    common.assign(D, {});
    specific.assign(D, {});
    for (std::size_t d = 0; d < D; ++d) {
        const std::size_t S = selected[d].size();
        specific[d].assign(S, {});
        if (S == 0) continue;
        std::vector<int> shared = indices(static_cast<int>(d), 0);
        for (std::size_t s = 1; s < S; ++s) {
            std::vector<int> next = indices(static_cast<int>(d), static_cast<int>(s));
            std::vector<int> both;
            std::set_intersection(shared.begin(), shared.end(), next.begin(), next.end(), std::back_inserter(both));
            shared = std::move(both);
        }
        common[d] = shared;
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<int> own = indices(static_cast<int>(d), static_cast<int>(s));
            std::set_difference(own.begin(), own.end(), shared.begin(), shared.end(),
                                std::back_inserter(specific[d][s]));
        }
    }
}

} // namespace hip
