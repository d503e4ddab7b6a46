#pragma once
#include <cstdint>
#include <hip/data.hpp>
#include <hip/penalty.hpp>

namespace hip {

enum class InnerOptimizer {
    fista_prox,         // accelerated proximal gradient with backtracking
    adaptive_gradient,  // Adagrad; penalized blocks take a row-wise proximal step
};

struct LineSearch
{
    double shrink = 0.5;        // step *= shrink until sufficient decrease holds
    double initial_step = 0.0;  // 0 selects 1 / L0 from the block's curvature bound
};

struct FitOptions
{
    Hyperparameters hyper;
    StandardizeOptions standardize;
    LineSearch line_search;
    InnerOptimizer penalized_optimizer = InnerOptimizer::fista_prox;
    double adagrad_rate = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Objective
{
    double unpenalized = 0.0;  // prediction loss + reconstruction loss
    double penalty = 0.0;
    double penalized = 0.0;
};

struct BlockUpdate
{
    Matrix value;
    int iterations = 0;
    bool converged = true;
    bool regularized = false;  // a singular Gram matrix needed the ridge
};

PenaltyConfig penalty_config(const FactorModel& model);

/// Starting point: Z^s from the left singular vectors of the stacked,
/// concatenated views; G and Xi all ones; Theta from regressing the outcome
/// on those singular vectors (continuous) or U(0,1) draws (multiclass), with
/// unit-length columns. `data` must already be in working (standardized)
/// units.
FactorModel initialize(const MultiViewDataset& data, int K, std::uint64_t seed = 0);

/// sum_s F(Y^s, Z^s, Theta): squared error or cross-entropy.
double outcome_loss(const FactorModel& model, const MultiViewDataset& data);
/// sum_d sum_s ||X^{d,s} - Z^s B^{d,s}'||_F^2.
double reconstruction_loss(const FactorModel& model, const MultiViewDataset& data);
Objective objective(const FactorModel& model, const MultiViewDataset& data);

// Gradients of the unpenalized objective with respect to one block.
Matrix xi_gradient(const FactorModel& model, const MultiViewDataset& data, int d, int s);
Matrix g_gradient(const FactorModel& model, const MultiViewDataset& data, int d);
Matrix z_gradient(const FactorModel& model, const MultiViewDataset& data, int s);
Matrix theta_gradient(const FactorModel& model, const MultiViewDataset& data);

// Block updates. Each minimizes the objective over one block with the
// others held at their values in `model`.
BlockUpdate update_xi(const FactorModel& model, const MultiViewDataset& data, int d, int s, const FitOptions& opts);
BlockUpdate update_g(const FactorModel& model, const MultiViewDataset& data, int d, const FitOptions& opts);
BlockUpdate update_z(const FactorModel& model, const MultiViewDataset& data, int s, const FitOptions& opts);
BlockUpdate update_theta(const FactorModel& model, const MultiViewDataset& data, const FitOptions& opts);

/// Standardizes `data`, initializes and runs block coordinate descent
/// (Xi -> G -> Z -> Theta) until the relative change of the unpenalized
/// objective drops below eps_outer.
FactorModel fit(const MultiViewDataset& data, const FitOptions& opts);

/// Runs block coordinate descent from `start` on data already in working
/// units. The hyperparameters of `opts` replace those stored in `start`.
FactorModel fit_from(FactorModel start, const MultiViewDataset& working, const FitOptions& opts);

} // namespace hip
