#include "acds/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace acds::design {

namespace {

// Sherman-Morrison denominators are >= 1 in exact arithmetic; anything this
// small means the stored inverse has drifted.
constexpr double kDenominatorTol = 1e-8;

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& g)
{
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
        throw ConditioningError("DesignState: regularized Gram matrix is not positive definite");
    }
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(g.rows(), g.cols()));
    return 0.5 * (inv + inv.transpose());
}

} // namespace

DesignState::DesignState(const Eigen::MatrixXd& rows, double rho, std::vector<DesignPoint> selected)
    : rho_(rho), selected_(std::move(selected))
{
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw DomainError("DesignState: rho must be finite and nonnegative");
    }
    if (!rows.allFinite()) {
        throw DomainError("DesignState: non-finite model-matrix rows");
    }
    const Index k = rows.cols();
    gram_ = rows.transpose() * rows;
    gram_.diagonal().array() += rho;
    gram_inverse_ = k > 0 ? spd_inverse(gram_) : Eigen::MatrixXd(0, 0);
}

void DesignState::refactorize()
{
    if (k() > 0) {
        gram_inverse_ = spd_inverse(gram_);
    }
    updates_since_refactor_ = 0;
}

void DesignState::rank1_update(const Eigen::Ref<const Eigen::VectorXd>& m)
{
    if (m.size() != k()) {
        throw DimensionError("rank1_update: vector length differs from Gram size");
    }
    if (!m.allFinite()) {
        throw DomainError("rank1_update: non-finite vector");
    }
    gram_.noalias() += m * m.transpose();
    const Eigen::VectorXd gm = gram_inverse_ * m;
    const double denom = 1.0 + m.dot(gm);
    ++updates_since_refactor_;
    if (!(denom > kDenominatorTol) || updates_since_refactor_ >= refactor_interval) {
        refactorize();
        return;
    }
    gram_inverse_.noalias() -= (gm / denom) * gm.transpose();
    gram_inverse_ = 0.5 * (gram_inverse_ + gram_inverse_.transpose()).eval();
}

DesignState rank1_update(DesignState state, const Eigen::Ref<const Eigen::VectorXd>& m)
{
    state.rank1_update(m);
    return state;
}

double d_increment(const DesignState& state, const Eigen::Ref<const Eigen::VectorXd>& m)
{
    if (m.size() != state.k()) {
        throw DimensionError("d_increment: vector length differs from Gram size");
    }
    if (!m.allFinite()) {
        throw DomainError("d_increment: non-finite vector");
    }
    return 1.0 + m.dot(state.gram_inverse() * m);
}

double min_distance(const DesignPoint& x, std::span<const DesignPoint> selected)
{
    if (selected.empty()) {
        throw DomainError("min_distance: no selected points");
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : selected) {
        if (s.dim() != x.dim()) {
            throw DimensionError("min_distance: dimension mismatch");
        }
        best = std::min(best, (x.coords() - s.coords()).squaredNorm());
    }
    return best;
}

AcdsWeights adaptive_weights(double sigma2_hat, double tau2_cv)
{
    if (!(sigma2_hat >= 0.0) || !(tau2_cv >= 0.0) || !std::isfinite(sigma2_hat) || !std::isfinite(tau2_cv)) {
        throw DomainError("adaptive_weights: inputs must be finite and nonnegative");
    }
    AcdsWeights w;
    const double total = sigma2_hat + tau2_cv;
    if (total == 0.0) {
        w.degenerate = true;
        return w;
    }
    w.alpha1 = tau2_cv / total;
    w.alpha2 = 1.0 - w.alpha1;
    return w;
}

double acds_score(const DesignPoint& candidate, const Eigen::Ref<const Eigen::VectorXd>& m,
                  const DesignState& state, const AcdsWeights& weights, double u_s, double u_d)
{
    double score = 0.0;
    if (weights.alpha1 != 0.0) {
        score += weights.alpha1 * min_distance(candidate, state.selected_points()) / u_s;
    }
    if (weights.alpha2 != 0.0) {
        score += weights.alpha2 * d_increment(state, m) / u_d;
    }
    return score;
}

namespace {

struct PoolScratch {
    Eigen::MatrixXd coords;
    Eigen::VectorXd min_d2;
    Eigen::VectorXd sum_d2;
};

PoolScratch distances_to_selected(const CandidatePool& pool, const DesignState& state, Exec exec)
{
    PoolScratch s;
    s.coords = pool.coordinate_matrix();
    const Index n = s.coords.rows();
    s.min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    s.sum_d2 = Eigen::VectorXd::Zero(n);
    for (const auto& x : state.selected_points()) {
        if (x.dim() != pool.dim()) {
            throw DimensionError("design: selected point dimension differs from pool");
        }
        kernels::accumulate_distances(s.coords, x.coords(), s.min_d2, s.sum_d2, exec);
    }
    return s;
}

void check_rows(const CandidatePool& pool, const DesignState& state, const Eigen::MatrixXd& rows)
{
    if (rows.cols() == 0) {
        return;
    }
    if (rows.rows() != pool.size() || rows.cols() != state.k()) {
        throw DimensionError("design: surrogate rows do not match pool size and basis length");
    }
}

} // namespace

PoolBounds pool_bounds(const CandidatePool& pool, const DesignState& state, const Eigen::MatrixXd& surrogate_rows,
                       Exec exec)
{
    const std::vector<Index> avail = pool.available_indices();
    if (avail.empty()) {
        throw DomainError("pool_bounds: no available candidates");
    }
    if (state.n() == 0) {
        throw DomainError("pool_bounds: design has no selected points");
    }
    check_rows(pool, state, surrogate_rows);
    PoolBounds b;
    const PoolScratch s = distances_to_selected(pool, state, exec);
    const double inv_n = 1.0 / static_cast<double>(state.n());
    for (Index i : avail) {
        b.u_s = std::max(b.u_s, s.sum_d2[i] * inv_n);
    }
    if (surrogate_rows.cols() > 0) {
        const Eigen::MatrixXd rows_t = surrogate_rows.transpose();
        Eigen::VectorXd dinc;
        kernels::d_increments(rows_t, state.gram_inverse(), avail, dinc, exec);
        b.u_d = dinc.maxCoeff();
    } else {
        b.u_d = 1.0;
    }
    return b;
}

std::vector<Index> select_batch(CandidatePool& pool, DesignState& state, const Eigen::MatrixXd& surrogate_rows,
                                const AcdsWeights& weights, Index batch_size, Exec exec)
{
    if (batch_size < 1) {
        throw DomainError("select_batch: batch size must be positive");
    }
    if (pool.available_count() < batch_size) {
        throw DomainError("select_batch: pool has fewer available points than the batch size");
    }
    check_rows(pool, state, surrogate_rows);
    const bool use_space = weights.alpha1 != 0.0;
    const bool use_dopt = weights.alpha2 != 0.0;
    if (use_dopt && surrogate_rows.cols() == 0) {
        throw DimensionError("select_batch: D-optimal weight requires surrogate rows");
    }
    if (use_space && state.n() == 0) {
        throw DomainError("select_batch: space-filling weight requires selected points");
    }

    PoolScratch s = distances_to_selected(pool, state, exec);
    const Eigen::MatrixXd rows_t = surrogate_rows.transpose();
    std::vector<Index> picked;
    picked.reserve(static_cast<std::size_t>(batch_size));
    Eigen::VectorXd dinc;

    for (Index b = 0; b < batch_size; ++b) {
        const std::vector<Index> avail = pool.available_indices();
        double u_s = 0.0;
        double u_d = 0.0;
        const double inv_n = state.n() > 0 ? 1.0 / static_cast<double>(state.n()) : 0.0;
        if (use_space) {
            for (Index i : avail) {
                u_s = std::max(u_s, s.sum_d2[i] * inv_n);
            }
        }
        if (use_dopt) {
            kernels::d_increments(rows_t, state.gram_inverse(), avail, dinc, exec);
            u_d = dinc.maxCoeff();
        }

        Index best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < avail.size(); ++c) {
            const Index i = avail[c];
            double score = 0.0;
            if (use_space && u_s > 0.0) {
                score += weights.alpha1 * s.min_d2[i] / u_s;
            }
            if (use_dopt) {
                score += weights.alpha2 * dinc[static_cast<Index>(c)] / u_d;
            }
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }

        pool.mark_selected(best);
        picked.push_back(best);
        if (rows_t.rows() > 0) {
            state.rank1_update(rows_t.col(best));
        }
        state.add_point(pool.point(best));
        kernels::accumulate_distances(s.coords, pool.point(best).coords(), s.min_d2, s.sum_d2, exec);
    }
    return picked;
}

std::vector<DesignPoint> select_batch(CandidatePool& pool, DesignState& state,
                                      std::span<const gp::GpModel> models, const basis::BasisLibrary& lib,
                                      const AcdsWeights& weights, Index batch_size, Exec exec)
{
    Eigen::MatrixXd rows;
    if (weights.alpha2 != 0.0) {
        rows = basis::eval_surrogate_rows(lib, models, pool.coordinate_matrix(), exec);
    }
    const std::vector<Index> idx = select_batch(pool, state, rows, weights, batch_size, exec);
    std::vector<DesignPoint> out;
    out.reserve(idx.size());
    for (Index i : idx) {
        out.push_back(pool.point(i));
    }
    return out;
}

double noise_to_signal_rho(std::span<const double> sigma2_hats, std::span<const double> response_variances)
{
    if (sigma2_hats.size() != response_variances.size() || sigma2_hats.empty()) {
        throw DimensionError("noise_to_signal_rho: need one variance per response");
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < sigma2_hats.size(); ++r) {
        if (!(response_variances[r] > 0.0)) {
            throw DomainError("noise_to_signal_rho: response variance must be positive");
        }
        if (!(sigma2_hats[r] >= 0.0)) {
            throw DomainError("noise_to_signal_rho: noise variance must be nonnegative");
        }
        acc += sigma2_hats[r] / response_variances[r];
    }
    return acc / static_cast<double>(sigma2_hats.size());
}

double noise_to_signal_rho(double sigma2_hat, double response_variance)
{
    return noise_to_signal_rho(std::span<const double>(&sigma2_hat, 1),
                               std::span<const double>(&response_variance, 1));
}

} // namespace acds::design
