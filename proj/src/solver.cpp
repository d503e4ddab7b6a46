#include <algorithm>
#include <cmath>
#include <limits>
#include <hip/random.hpp>
#include <hip/softmax.hpp>
#include <hip/solver.hpp>

namespace hip {

namespace {

constexpr double kTiny = 1e-300;

double relative_change(double before, double after)
{
    return std::abs(before - after) / std::max(std::abs(before), kTiny);
}

void require_outcome(const MultiViewDataset& data)
{
    if (!data.outcome().present()) throw Error(ErrorKind::data, "fitting requires an outcome");
}

/// One subgroup's contribution to the smooth loss of a G or Xi block:
/// ||X - Z (mask o P)'||^2 = const - 2 <XtZ, mask o P> + tr(B ZtZ B').
struct QuadraticTerm
{
    Matrix xtz;   // p x K
    Matrix ztz;   // K x K
    Matrix mask;  // p x K, the fixed factor of the product
    double constant = 0.0;
};

struct SmoothBlock
{
    std::vector<QuadraticTerm> terms;

    double value(const Matrix& P) const
    {
        double f = 0.0;
        for (const auto& t : terms) {
            const Matrix B = t.mask.cwiseProduct(P);
            f += t.constant - 2.0 * t.xtz.cwiseProduct(B).sum() + (B * t.ztz).cwiseProduct(B).sum();
        }
        return std::max(f, 0.0);
    }

    Matrix gradient(const Matrix& P) const
    {
        Matrix g = Matrix::Zero(P.rows(), P.cols());
        for (const auto& t : terms) {
            const Matrix B = t.mask.cwiseProduct(P);
            g += (2.0 * (B * t.ztz - t.xtz)).cwiseProduct(t.mask);
        }
        return g;
    }

    /// Upper bound on the gradient's Lipschitz constant.
    double lipschitz() const
    {
        double L = 0.0;
        for (const auto& t : terms) {
            if (t.ztz.size() == 0 || t.mask.size() == 0) continue;
            Eigen::SelfAdjointEigenSolver<Matrix> eig(t.ztz, Eigen::EigenvaluesOnly);
            L += 2.0 * eig.eigenvalues().maxCoeff() * t.mask.cwiseAbs2().maxCoeff();
        }
        return L;
    }
};

/// Accelerated proximal gradient on f(P) + threshold * sum_l ||p_l||.
/// Returns the best iterate seen, so the block objective never increases.
template <class Value, class Gradient>
BlockUpdate fista(const Matrix& start, Value&& f, Gradient&& grad, double threshold, double lipschitz,
                  const FitOptions& opts)
{
    const double penalty_rows = static_cast<double>(std::max<Eigen::Index>(start.rows(), 1));
    auto total = [&](const Matrix& P, double smooth) { return smooth + threshold * row_norm_sum(P); };

    double step = opts.line_search.initial_step > 0.0 ? opts.line_search.initial_step
                                                      : 1.0 / std::max(lipschitz, 1e-12);
    Matrix x = start, y = start;
    double t = 1.0;
    BlockUpdate result{start, 0, false};
    double best = total(start, f(start));

    for (int it = 1; it <= opts.hyper.max_inner_iters; ++it) {
        const Matrix g = grad(y);
        const double fy = f(y);
        Matrix next;
        double fnext = 0.0;
        for (int backtrack = 0;; ++backtrack) {
            next = prox_block_l21(y - step * g, step * threshold);
            const Matrix diff = next - y;
            fnext = f(next);
            const double bound = fy + g.cwiseProduct(diff).sum() + diff.squaredNorm() / (2.0 * step);
            if (fnext <= bound + 1e-12 * std::max(1.0, std::abs(fy)) || backtrack >= 60) break;
            step *= opts.line_search.shrink;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = next + ((t - 1.0) / t_next) * (next - x);
        const double change = (next - x).squaredNorm() / penalty_rows;
        x = std::move(next);
        t = t_next;

        const double value = total(x, fnext);
        if (value < best) {
            best = value;
            result.value = x;
        }
        result.iterations = it;
        if (change < opts.hyper.eps_inner) {
            result.converged = true;
            break;
        }
    }
    return result;
}

/// Adagrad on f(P) + threshold * sum_l ||p_l||. With a positive threshold
/// the step is shared within a row so the row-wise prox stays exact.
template <class Value, class Gradient>
BlockUpdate adagrad(const Matrix& start, Value&& f, Gradient&& grad, double threshold, const FitOptions& opts)
{
    auto total = [&](const Matrix& P) { return f(P) + (threshold > 0.0 ? threshold * row_norm_sum(P) : 0.0); };
    Matrix x = start;
    Matrix accum = Matrix::Zero(start.rows(), start.cols());
    double previous = total(x);
    double best = previous;
    BlockUpdate result{start, 0, false};
    const double rate = opts.adagrad_rate;

    for (int it = 1; it <= opts.hyper.max_inner_iters; ++it) {
        const Matrix g = grad(x);
        accum += g.cwiseAbs2();
        if (threshold > 0.0) {
            for (Eigen::Index l = 0; l < x.rows(); ++l) {
                const double row_step = rate / (std::sqrt(accum.row(l).mean()) + 1e-10);
                Matrix row = x.row(l) - row_step * g.row(l);
                x.row(l) = prox_block_l21(row, row_step * threshold);
            }
        } else {
            x.array() -= rate * g.array() / (accum.array().sqrt() + 1e-10);
        }
        const double value = total(x);
        if (value < best) {
            best = value;
            result.value = x;
        }
        result.iterations = it;
        if (relative_change(previous, value) < opts.hyper.eps_inner) {
            result.converged = true;
            break;
        }
        previous = value;
    }
    return result;
}

BlockUpdate minimize_block(const SmoothBlock& block, const Matrix& start, double lambda, int gamma,
                           const FitOptions& opts)
{
    auto f = [&block](const Matrix& P) { return block.value(P); };
    auto g = [&block](const Matrix& P) { return block.gradient(P); };
    const double threshold = lambda * gamma;
    if (gamma == 0 || opts.penalized_optimizer == InnerOptimizer::adaptive_gradient) {
        return adagrad(start, f, g, threshold, opts);
    }
    return fista(start, f, g, threshold, block.lipschitz(), opts);
}

/// Solves (M + ridge) X = rhs for symmetric positive semidefinite M, adding
/// a ridge only when M is numerically singular.
Matrix solve_gram(const Matrix& gram, const Matrix& rhs, double ridge_eps, bool* regularized)
{
    const Eigen::Index K = gram.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    const double bottom = eig.eigenvalues().minCoeff();
    Matrix m = gram;
    if (!(bottom > 1e-12 * std::max(top, kTiny)) || top <= 0.0) {
        const double scale = top > 0.0 ? gram.trace() / static_cast<double>(K) : 1.0;
        m += std::max(ridge_eps, 1e-12) * scale * Matrix::Identity(K, K);
        if (regularized) *regularized = true;
    }
    return m.ldlt().solve(rhs);
}

Matrix stacked_z(const FactorModel& model)
{
    Eigen::Index rows = 0;
    for (const auto& z : model.Z) rows += z.rows();
    Matrix out(rows, model.components());
    Eigen::Index row = 0;
    for (const auto& z : model.Z) {
        out.middleRows(row, z.rows()) = z;
        row += z.rows();
    }
    return out;
}

void normalize_columns(Matrix& m)
{
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const double norm = m.col(j).norm();
        if (norm > 0.0) m.col(j) /= norm;
    }
}

} // namespace

void FitOptions::validate() const
{
    hyper.validate();
    if (!(line_search.shrink > 0.0 && line_search.shrink < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "line search shrink factor must lie in (0, 1)");
    }
    if (!(adagrad_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "adagrad rate must be positive");
}

PenaltyConfig penalty_config(const FactorModel& model)
{
    return {model.hyper.lambda_g, model.hyper.lambda_xi, model.gamma};
}

FactorModel initialize(const MultiViewDataset& data, int K, std::uint64_t seed)
{
    require_outcome(data);
    const Dimensions& dims = data.dims();
    const int min_n = *std::min_element(dims.n.begin(), dims.n.end());
    if (K < 1 || K > min_n || K > dims.total_p()) {
        throw Error(ErrorKind::invalid_argument,
                    "K must satisfy 1 <= K <= min(n_s) and K <= total number of variables");
    }

    FactorModel model;
    model.outcome = dims.outcome;
    model.gamma = data.gamma();
    model.hyper.K = K;
    model.view_names = data.view_names();
    model.subgroup_names = data.subgroup_names();
    model.variable_names = data.variable_names();
    model.outcome_names = data.outcome().names;

    const Matrix concat = data.concatenated();
    Eigen::BDCSVD<Matrix> svd(concat, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? sv(0) * std::numeric_limits<double>::epsilon()
                                              * static_cast<double>(std::max(concat.rows(), concat.cols()))
                                        : 0.0;
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;

    Matrix U(concat.rows(), K);
    const int usable = std::min(rank, K);
    U.leftCols(usable) = svd.matrixU().leftCols(usable);
    Rng rng(derive_seed(seed, 0x5eed));
    if (usable < K) {
        const double scale = 1e-3 / std::sqrt(static_cast<double>(concat.rows()));
        U.rightCols(K - usable) = scale * rng.normal_matrix(concat.rows(), K - usable);
        model.warnings.push_back("concatenated data has rank " + std::to_string(rank)
                                 + " < K; padded initial scores with small noise");
    }

    Eigen::Index row = 0;
    for (int s = 0; s < dims.subgroups; ++s) {
        model.Z.push_back(U.middleRows(row, dims.n[s]));
        row += dims.n[s];
    }
    for (int d = 0; d < dims.views; ++d) {
        model.G.push_back(Matrix::Ones(dims.p[d], K));
        model.Xi.emplace_back(dims.subgroups, Matrix::Ones(dims.p[d], K));
    }

    if (dims.outcome == OutcomeKind::continuous) {
        model.Theta = U.colPivHouseholderQr().solve(data.stacked_outcome());
    } else {
        Rng theta_rng(seed);
        model.Theta = theta_rng.uniform_matrix(K, dims.m, 0.0, 1.0);
    }
    normalize_columns(model.Theta);
    return model;
}

double outcome_loss(const FactorModel& model, const MultiViewDataset& data)
{
    if (!data.outcome().present()) return 0.0;
    double total = 0.0;
    for (int s = 0; s < data.num_subgroups(); ++s) {
        const Matrix W = model.Z[s] * model.Theta;
        if (model.outcome == OutcomeKind::continuous) total += (data.y(s) - W).squaredNorm();
        else total += cross_entropy(data.y(s), W);
    }
    return total;
}

double reconstruction_loss(const FactorModel& model, const MultiViewDataset& data)
{
    double total = 0.0;
    for (int d = 0; d < data.num_views(); ++d)
        for (int s = 0; s < data.num_subgroups(); ++s)
            total += (data.x(d, s) - model.Z[s] * model.loading(d, s).transpose()).squaredNorm();
    return total;
}

Objective objective(const FactorModel& model, const MultiViewDataset& data)
{
    Objective o;
    o.unpenalized = outcome_loss(model, data) + reconstruction_loss(model, data);
    o.penalty = penalty_value(model.G, model.Xi, penalty_config(model));
    o.penalized = o.unpenalized + o.penalty;
    return o;
}

Matrix xi_gradient(const FactorModel& model, const MultiViewDataset& data, int d, int s)
{
    const Matrix residual = data.x(d, s) - model.Z[s] * model.loading(d, s).transpose();
    return (-2.0 * residual.transpose() * model.Z[s]).cwiseProduct(model.G[d]);
}

Matrix g_gradient(const FactorModel& model, const MultiViewDataset& data, int d)
{
    Matrix g = Matrix::Zero(model.G[d].rows(), model.G[d].cols());
    for (int s = 0; s < data.num_subgroups(); ++s) {
        const Matrix residual = data.x(d, s) - model.Z[s] * model.loading(d, s).transpose();
        g += (-2.0 * residual.transpose() * model.Z[s]).cwiseProduct(model.Xi[d][s]);
    }
    return g;
}

Matrix z_gradient(const FactorModel& model, const MultiViewDataset& data, int s)
{
    const Matrix W = model.Z[s] * model.Theta;
    Matrix g = model.outcome == OutcomeKind::continuous
                   ? Matrix(-2.0 * (data.y(s) - W) * model.Theta.transpose())
                   : Matrix((row_softmax(W) - data.y(s)) * model.Theta.transpose());
    for (int d = 0; d < data.num_views(); ++d) {
        const Matrix B = model.loading(d, s);
        g -= 2.0 * (data.x(d, s) - model.Z[s] * B.transpose()) * B;
    }
    return g;
}

Matrix theta_gradient(const FactorModel& model, const MultiViewDataset& data)
{
    Matrix g = Matrix::Zero(model.Theta.rows(), model.Theta.cols());
    for (int s = 0; s < data.num_subgroups(); ++s) {
        const Matrix W = model.Z[s] * model.Theta;
        if (model.outcome == OutcomeKind::continuous) g -= 2.0 * model.Z[s].transpose() * (data.y(s) - W);
        else g += model.Z[s].transpose() * (row_softmax(W) - data.y(s));
    }
    return g;
}

BlockUpdate update_xi(const FactorModel& model, const MultiViewDataset& data, int d, int s, const FitOptions& opts)
{
    SmoothBlock block;
    const Matrix& Z = model.Z[s];
    block.terms.push_back({data.x(d, s).transpose() * Z, Z.transpose() * Z, model.G[d], data.x(d, s).squaredNorm()});
    return minimize_block(block, model.Xi[d][s], opts.hyper.lambda_xi, model.gamma[d], opts);
}

BlockUpdate update_g(const FactorModel& model, const MultiViewDataset& data, int d, const FitOptions& opts)
{
    SmoothBlock block;
    for (int s = 0; s < data.num_subgroups(); ++s) {
        const Matrix& Z = model.Z[s];
        block.terms.push_back({data.x(d, s).transpose() * Z, Z.transpose() * Z, model.Xi[d][s],
                               data.x(d, s).squaredNorm()});
    }
    return minimize_block(block, model.G[d], opts.hyper.lambda_g, model.gamma[d], opts);
}

BlockUpdate update_z(const FactorModel& model, const MultiViewDataset& data, int s, const FitOptions& opts)
{
    const int K = model.components();
    // X~ B~' and B~ B~' over the views; the outcome joins them below.
    Matrix xb = Matrix::Zero(data.dims().n[s], K);
    Matrix btb = Matrix::Zero(K, K);
    double xx = 0.0;
    for (int d = 0; d < data.num_views(); ++d) {
        const Matrix B = model.loading(d, s);
        xb += data.x(d, s) * B;
        btb += B.transpose() * B;
        xx += data.x(d, s).squaredNorm();
    }

    if (model.outcome == OutcomeKind::continuous) {
        xb += data.y(s) * model.Theta.transpose();
        btb += model.Theta * model.Theta.transpose();
        BlockUpdate u;
        u.value = solve_gram(btb, xb.transpose(), opts.hyper.ridge_eps, &u.regularized).transpose();
        u.iterations = 1;
        return u;
    }

    const Matrix& Y = data.y(s);
    const Matrix& Theta = model.Theta;
    auto f = [&](const Matrix& Z) {
        const double recon = xx - 2.0 * Z.cwiseProduct(xb).sum() + (Z * btb).cwiseProduct(Z).sum();
        return cross_entropy(Y, Z * Theta) + std::max(recon, 0.0);
    };
    auto g = [&](const Matrix& Z) {
        return Matrix((row_softmax(Z * Theta) - Y) * Theta.transpose() - 2.0 * xb + 2.0 * Z * btb);
    };
    return adagrad(model.Z[s], f, g, 0.0, opts);
}

BlockUpdate update_theta(const FactorModel& model, const MultiViewDataset& data, const FitOptions& opts)
{
    const Matrix Z = stacked_z(model);
    const Matrix Y = data.stacked_outcome();
    if (model.outcome == OutcomeKind::continuous) {
        BlockUpdate u;
        u.value = solve_gram(Z.transpose() * Z, Z.transpose() * Y, opts.hyper.ridge_eps, &u.regularized);
        u.iterations = 1;
        return u;
    }
    auto f = [&](const Matrix& T) { return cross_entropy(Y, Z * T); };
    auto g = [&](const Matrix& T) { return Matrix(Z.transpose() * (row_softmax(Z * T) - Y)); };
    return adagrad(model.Theta, f, g, 0.0, opts);
}

FactorModel fit(const MultiViewDataset& data, const FitOptions& opts)
{
    opts.validate();
    require_outcome(data);
    Standardized prepared = standardize(data, opts.standardize);
    FactorModel start = initialize(prepared.data, opts.hyper.K, opts.seed);
    start.standardizer = std::move(prepared.transform);
    return fit_from(std::move(start), prepared.data, opts);
}

FactorModel fit_from(FactorModel model, const MultiViewDataset& working, const FitOptions& opts)
{
    opts.validate();
    require_outcome(working);
    if (opts.hyper.K != model.components()) {
        throw Error(ErrorKind::invalid_argument, "starting model has a different K than the options");
    }
    model.hyper = opts.hyper;
    model.trace.clear();
    model.status = FitStatus::max_iterations;
    model.inner_nonconverged = 0;

    const int D = working.num_views(), S = working.num_subgroups();
    double data_scale = 0.0;
    for (int d = 0; d < D; ++d)
        for (int s = 0; s < S; ++s) data_scale += working.x(d, s).squaredNorm();
    if (working.outcome().kind == OutcomeKind::continuous)
        for (int s = 0; s < S; ++s) data_scale += working.y(s).squaredNorm();

    bool regularized = false;
    auto note = [&](const BlockUpdate& u) {
        if (!u.converged) ++model.inner_nonconverged;
        regularized = regularized || u.regularized;
    };

    double previous = objective(model, working).unpenalized;
    FactorModel best = model;
    double best_penalized = std::numeric_limits<double>::infinity();

    for (int it = 1; it <= opts.hyper.max_outer_iters; ++it) {
        for (int d = 0; d < D; ++d) {
            for (int s = 0; s < S; ++s) {
                BlockUpdate u = update_xi(model, working, d, s, opts);
                note(u);
                model.Xi[d][s] = std::move(u.value);
            }
        }
        for (int d = 0; d < D; ++d) {
            BlockUpdate u = update_g(model, working, d, opts);
            note(u);
            model.G[d] = std::move(u.value);
        }
        for (int s = 0; s < S; ++s) {
            BlockUpdate u = update_z(model, working, s, opts);
            note(u);
            model.Z[s] = std::move(u.value);
        }
        {
            BlockUpdate u = update_theta(model, working, opts);
            note(u);
            model.Theta = std::move(u.value);
        }

        const Objective o = objective(model, working);
        model.trace.push_back({o.unpenalized, o.penalty, o.penalized});
        model.outer_iterations = it;

        if (!std::isfinite(o.penalized)) {
            model.status = FitStatus::diverged;
            break;
        }
        if (o.penalized < best_penalized) {
            best_penalized = o.penalized;
            best.G = model.G;
            best.Xi = model.Xi;
            best.Z = model.Z;
            best.Theta = model.Theta;
        }
        if (it > 1 && o.unpenalized > previous * 1.01) {
            model.status = FitStatus::diverged;
            break;
        }
        if (o.unpenalized <= 1e-14 * data_scale || relative_change(previous, o.unpenalized) < opts.hyper.eps_outer) {
            model.status = FitStatus::converged;
            break;
        }
        previous = o.unpenalized;
    }

    if (regularized) {
        model.warnings.push_back("singular Gram matrix in a least-squares update; added ridge_eps * I");
    }
    if (model.status == FitStatus::diverged) {
        model.G = std::move(best.G);
        model.Xi = std::move(best.Xi);
        model.Z = std::move(best.Z);
        model.Theta = std::move(best.Theta);
        model.warnings.push_back("unpenalized objective increased by more than 1% in an outer iteration; "
                                 "returning the best iterate");
    }
    return model;
}

} // namespace hip
