#pragma once
#include <cstdint>
#include <optional>
#include <hip/data.hpp>
#include <hip/random.hpp>
#include <hip/solver.hpp>

namespace hip {

// ---------------------------------------------------------------------------
// Lambda search

enum class GridMode { grid, random };

struct LambdaPair
{
    double lambda_g = 0.0;
    double lambda_xi = 0.0;
    auto operator<=>(const LambdaPair&) const = default;
};

struct LambdaGrid
{
    int steps = 8;             // a: values per axis, lambda_max * i / a for i = 1..a
    double lambda_max = 1.0;
    GridMode mode = GridMode::random;
    double fraction = 0.15;    // random mode keeps ceil(fraction * a^2) pairs
    std::uint64_t seed = 0;
    std::vector<LambdaPair> candidates;  // filled by make_lambda_grid

    void validate() const;
};

/// Fills `candidates`: the full a x a grid, or a seeded random subset of
/// ceil(fraction * a^2) distinct pairs, sorted.
LambdaGrid make_lambda_grid(int steps, double lambda_max, GridMode mode, double fraction = 0.15,
                            std::uint64_t seed = 0);

struct BicRecord
{
    LambdaPair lambda;
    int K = 0;
    double bic = 0.0;
    int model_size = 0;  // nonzero rows summed over all B^{d,s}
    double loss = 0.0;   // unpenalized objective
    FitStatus status = FitStatus::max_iterations;
};

/// Count of nonzero rows over every B^{d,s}.
int model_size(const FactorModel& model, double zero_tol = kZeroTol);

/// 2 * (prediction loss + reconstruction loss) + model_size * log(N).
/// `working` is in the model's standardized units.
double bic(const FactorModel& model, const MultiViewDataset& working, double zero_tol = kZeroTol);

struct LambdaSearchResult
{
    LambdaPair best;
    std::vector<BicRecord> records;  // candidate order
    FactorModel best_model;
    bool all_diverged = false;
};

/// Index of the winning record: smallest BIC, then larger lambda_g + lambda_xi,
/// then the lexicographically smaller pair. Diverged fits are skipped unless
/// every fit diverged, in which case the lowest loss wins.
std::size_t pick_best(const std::vector<BicRecord>& records);

/// Fits one model per candidate (in parallel, each from the same start) and
/// keeps the BIC minimizer. `data` is in raw units.
LambdaSearchResult search_lambda(const MultiViewDataset& data, int K, const LambdaGrid& grid,
                                 const FitOptions& opts, int workers = 1);

// ---------------------------------------------------------------------------
// K selection

enum class EigenProxy { singular_values, squared_singular_values };

struct KSelectOptions
{
    bool use_raw = true;  // false: per-subgroup standardized views
    EigenProxy proxy = EigenProxy::singular_values;
};

/// Eigenvalue proxies of the N x (p_1 + ... + p_D) concatenated matrix, descending.
Vector scree_values(const MultiViewDataset& data, const KSelectOptions& options = {});

/// First k (1-based) with (e_k - e_{k+1}) / e_k < threshold; the last index
/// when no change falls below it.
int select_k_from_spectrum(const Vector& values, double threshold);

int select_k_simple(const MultiViewDataset& data, double threshold, const KSelectOptions& options = {});

struct KSelection
{
    int K = 1;
    int simple_k = 1;
    LambdaSearchResult at_k;
    LambdaSearchResult at_k_plus_1;
};

/// Runs the lambda search at k = select_k_simple(...) and at k + 1 and keeps
/// the K whose best BIC is smaller (k on ties). k + 1 is skipped when it
/// exceeds the admissible range.
KSelection select_k_algorithmic(const MultiViewDataset& data, double threshold, const LambdaGrid& grid,
                                const FitOptions& opts, const KSelectOptions& k_options = {}, int workers = 1);

// ---------------------------------------------------------------------------
// Bootstrap stability selection

struct BootstrapSample
{
    std::vector<std::vector<int>> in_bag;      // [s], n_s draws with replacement
    std::vector<std::vector<int>> out_of_bag;  // [s], ascending, never drawn
};

BootstrapSample draw_bootstrap(const std::vector<int>& sizes, Rng& rng);
MultiViewDataset resample(const MultiViewDataset& data, const BootstrapSample& sample);

struct BootstrapOptions
{
    int n_boot = 50;
    std::vector<double> top_fraction;  // per view, or one value for all views
    std::optional<LambdaGrid> grid;    // tune each resample when set
    std::uint64_t seed = 0;
    int workers = 1;
    double zero_tol = kZeroTol;
};

/// Selection report of a single fit: the support of every B^{d,s} with
/// weights sum_k |B_lk|.
SelectionReport selection_report(const FactorModel& model, double zero_tol = kZeroTol);

/// Resamples within each subgroup, fits (tuning when a grid is given) and
/// keeps, per view and subgroup, the top fraction of variables by selection
/// count (ties at the cutoff kept). Weights average sum_k |B_lk| over the
/// resamples that selected the variable.
SelectionReport bootstrap_stability(const MultiViewDataset& data, const FitOptions& opts,
                                    const BootstrapOptions& boot);

} // namespace hip
