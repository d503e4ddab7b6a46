#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace hip {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Error categories; the CLI maps them to distinct exit codes.
enum class ErrorKind { invalid_argument, data, io, convergence };

class Error : public std::runtime_error
{
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

enum class OutcomeKind { continuous, multiclass };

struct Dimensions
{
    int views = 0;
    int subgroups = 0;
    std::vector<int> n;    // per subgroup
    int total_n = 0;
    std::vector<int> p;    // per view
    OutcomeKind outcome = OutcomeKind::continuous;
    int q = 0;             // continuous outcome columns, 0 for multiclass
    int m = 0;             // classes, 0 for continuous

    int total_p() const;
    int outcome_cols() const { return outcome == OutcomeKind::continuous ? q : m; }
};

/// Outcome matrices per subgroup. An empty `y` means the dataset carries no
/// outcome (prediction inputs).
struct Outcome
{
    OutcomeKind kind = OutcomeKind::continuous;
    std::vector<Matrix> y;
    std::vector<std::string> names;  // column names (outcomes or classes)

    bool present() const { return !y.empty(); }
};

/// Views X^{d,s} for D views and S subgroups plus the outcome. Validated on
/// construction and immutable afterwards.
class MultiViewDataset
{
public:
    MultiViewDataset() = default;

    /// `views[d][s]` is the n_s x p_d block of view d for subgroup s. Empty
    /// name lists are filled with generated names.
    MultiViewDataset(std::vector<std::vector<Matrix>> views,
                     Outcome outcome,
                     std::vector<int> gamma = {},
                     std::vector<std::vector<std::string>> variable_names = {},
                     std::vector<std::string> subgroup_names = {},
                     std::vector<std::string> view_names = {});

    const Matrix& x(int d, int s) const { return views_[d][s]; }
    const std::vector<std::vector<Matrix>>& views() const { return views_; }
    const Outcome& outcome() const { return outcome_; }
    const Matrix& y(int s) const { return outcome_.y[s]; }
    const std::vector<int>& gamma() const { return gamma_; }
    const std::vector<std::vector<std::string>>& variable_names() const { return variable_names_; }
    const std::vector<std::string>& subgroup_names() const { return subgroup_names_; }
    const std::vector<std::string>& view_names() const { return view_names_; }
    const Dimensions& dims() const { return dims_; }

    int num_views() const { return dims_.views; }
    int num_subgroups() const { return dims_.subgroups; }

    /// Views for subgroup s side by side: n_s x (p_1 + ... + p_D).
    Matrix concatenated(int s) const;
    /// All subgroups stacked in order: N x (p_1 + ... + p_D).
    Matrix concatenated() const;
    /// Outcome of all subgroups stacked in order.
    Matrix stacked_outcome() const;

    /// Same metadata, different numbers. Shapes must match.
    MultiViewDataset with_data(std::vector<std::vector<Matrix>> views, std::vector<Matrix> y) const;

private:
    std::vector<std::vector<Matrix>> views_;
    Outcome outcome_;
    std::vector<int> gamma_;
    std::vector<std::vector<std::string>> variable_names_;
    std::vector<std::string> subgroup_names_;
    std::vector<std::string> view_names_;
    Dimensions dims_;
};

/// Class index of each one-hot row.
std::vector<int> labels_from_onehot(const Matrix& y);
Matrix onehot(const std::vector<int>& labels, int classes);

// ---------------------------------------------------------------------------
// Standardization

struct ColumnTransform
{
    Vector mean;
    Vector scale;
};

/// Column means and sample standard deviations (divisor n-1). Constant
/// columns get scale 1; their indices are appended to `constant_columns`.
ColumnTransform fit_columns(const Matrix& m, std::vector<int>* constant_columns = nullptr);
Matrix apply_columns(const ColumnTransform& t, const Matrix& m);
Matrix invert_columns(const ColumnTransform& t, const Matrix& m);

struct StandardizeOptions
{
    bool x = false;  // per-subgroup centering and scaling of every view
    bool y = true;   // per-subgroup standardization of continuous outcomes
};

/// Per-subgroup transforms captured at fit time. Empty vectors mean the
/// identity transform.
struct Standardizer
{
    std::vector<std::vector<ColumnTransform>> x;  // [d][s]
    std::vector<ColumnTransform> y;               // [s]
    std::vector<std::string> warnings;

    bool transforms_x() const { return !x.empty(); }
    bool transforms_y() const { return !y.empty(); }

    MultiViewDataset apply(const MultiViewDataset& data) const;
    MultiViewDataset invert(const MultiViewDataset& data) const;
    Matrix apply_x(int d, int s, const Matrix& m) const;
    Matrix apply_y(int s, const Matrix& m) const;
    Matrix invert_y(int s, const Matrix& m) const;
};

struct Standardized
{
    MultiViewDataset data;
    Standardizer transform;
};

Standardized standardize(const MultiViewDataset& data, StandardizeOptions options = {});

// ---------------------------------------------------------------------------
// Model

struct Hyperparameters
{
    double lambda_g = 0.0;
    double lambda_xi = 0.0;
    int K = 2;
    double eps_outer = 1e-6;
    double eps_inner = 1e-6;
    int max_outer_iters = 500;
    int max_inner_iters = 1000;
    /// Relative ridge for prediction: the added multiple of the identity is
    /// ridge_eps * trace(B'B) / K.
    double ridge_eps = 1e-4;

    void validate() const;
};

struct LossRecord
{
    double unpenalized = 0.0;
    double penalty = 0.0;
    double penalized = 0.0;
};

using LossTrace = std::vector<LossRecord>;

enum class FitStatus { converged, max_iterations, diverged };

const char* to_string(FitStatus status);

struct FactorModel
{
    std::vector<Matrix> G;                // [d], p_d x K
    std::vector<std::vector<Matrix>> Xi;  // [d][s], p_d x K
    std::vector<Matrix> Z;                // [s], n_s x K
    Matrix Theta;                         // K x q or K x m, shared by all subgroups

    OutcomeKind outcome = OutcomeKind::continuous;
    std::vector<int> gamma;
    Hyperparameters hyper;
    Standardizer standardizer;
    LossTrace trace;
    FitStatus status = FitStatus::max_iterations;
    int outer_iterations = 0;
    int inner_nonconverged = 0;
    std::vector<std::string> warnings;

    std::vector<std::string> view_names;
    std::vector<std::string> subgroup_names;
    std::vector<std::vector<std::string>> variable_names;
    std::vector<std::string> outcome_names;

    int components() const { return static_cast<int>(Theta.rows()); }
    int num_views() const { return static_cast<int>(G.size()); }
    int num_subgroups() const { return static_cast<int>(Z.size()); }

    /// B^{d,s} = G^d o Xi^{d,s}.
    Matrix loading(int d, int s) const { return G[d].cwiseProduct(Xi[d][s]); }
    /// B^{1,s}; ...; B^{D,s} stacked: (p_1 + ... + p_D) x K.
    Matrix concatenated_loading(int s) const;
};

// ---------------------------------------------------------------------------
// Selection report

struct SelectedVariable
{
    int index = 0;
    std::string name;
    int times_selected = 1;
    double weight = 0.0;  // sum_k |B_lk|
};

struct SelectionReport
{
    std::vector<std::string> view_names;
    std::vector<std::string> subgroup_names;
    std::vector<std::vector<std::vector<SelectedVariable>>> selected;  // [d][s], sorted by index
    std::vector<std::vector<int>> common;                              // [d]
    std::vector<std::vector<std::vector<int>>> specific;               // [d][s]

    /// Recomputes common and specific from `selected`.
    void classify();
    std::vector<int> indices(int d, int s) const;
};

} // namespace hip
