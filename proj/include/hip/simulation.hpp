#pragma once
#include <cstdint>
#include <optional>
#include <hip/data.hpp>
#include <hip/random.hpp>

namespace hip {

enum class Overlap { full, partial };
enum class Setting { p1, p2, p3, custom };

/// Synthetic benchmark configuration. Defaults reproduce the two-view,
/// two-subgroup design with n = (250, 260), K = 2, sigma_x = 0.2 and
/// sigma_y = 0.5.
struct SimScenario
{
    Overlap overlap = Overlap::full;
    Setting setting = Setting::p1;
    std::vector<int> custom_p;  // used when setting == custom
    OutcomeKind outcome = OutcomeKind::continuous;
    std::vector<int> n = {250, 260};
    int K_true = 2;
    double sigma_x = 0.2;
    double sigma_y = 0.5;
    std::optional<Matrix> theta;  // preset per outcome kind when empty
    int n_signal = 50;
    bool stochastic_labels = false;  // draw classes from softmax instead of argmax
    std::uint64_t seed = 0;

    std::vector<int> dimensions() const;
    Matrix true_theta() const;
    void validate() const;
};

struct GroundTruth
{
    std::vector<std::vector<Matrix>> B;                  // [d][s]
    Matrix theta;
    std::vector<std::vector<std::vector<int>>> signal;  // [d][s], ascending
};

struct SimulatedData
{
    MultiViewDataset train;
    MultiViewDataset test;
    GroundTruth truth;
    std::vector<Matrix> z_train;
    std::vector<Matrix> z_test;
};

/// Signal rows of subgroup s: 0..n_signal-1 for full overlap; for partial
/// overlap each subgroup shifts by n_signal/2.
std::vector<int> signal_rows(const SimScenario& scenario, int s);

/// Modified Gram-Schmidt on the columns (orthonormal result). Zero rows stay zero.
Matrix orthonormalize_columns(const Matrix& m);

/// True loadings: U(0.5, 1) on signal rows, zero elsewhere, then
/// orthonormalized columns.
GroundTruth generate_loadings(const SimScenario& scenario, Rng& rng);

/// Independent train and test sets sharing one ground truth.
SimulatedData generate_dataset(const SimScenario& scenario);

} // namespace hip
