#ifndef ACDS_DESIGN_HPP
#define ACDS_DESIGN_HPP

#include <span>
#include <vector>

#include <Eigen/Core>

#include "acds/basis.hpp"
#include "acds/core.hpp"
#include "acds/gp.hpp"
#include "acds/parallel.hpp"

namespace acds::design {

/// Regularized information matrix G = M'M + rho I of the current design,
/// together with its inverse, kept current by rank-1 updates.
class DesignState {
public:
    DesignState() = default;
    /// Builds G from model-matrix rows (n x k). `rows` may have zero columns
    /// for model-free (maximin) selection.
    DesignState(const Eigen::MatrixXd& rows, double rho, std::vector<DesignPoint> selected);

    const Eigen::MatrixXd& gram() const { return gram_; }
    const Eigen::MatrixXd& gram_inverse() const { return gram_inverse_; }
    double rho() const { return rho_; }
    const std::vector<DesignPoint>& selected_points() const { return selected_; }
    Index n() const { return static_cast<Index>(selected_.size()); }
    Index k() const { return gram_.rows(); }
    int updates_since_refactor() const { return updates_since_refactor_; }

    /// Sherman-Morrison update of G^-1 for G + m m'. Falls back to a full
    /// re-factorization when the denominator degenerates, and re-factorizes
    /// every `refactor_interval` updates.
    void rank1_update(const Eigen::Ref<const Eigen::VectorXd>& m);
    void add_point(DesignPoint x) { selected_.push_back(std::move(x)); }
    void refactorize();

    static constexpr int refactor_interval = 32;

private:
    Eigen::MatrixXd gram_;
    Eigen::MatrixXd gram_inverse_;
    double rho_ = 0.0;
    std::vector<DesignPoint> selected_;
    int updates_since_refactor_ = 0;
};

struct AcdsWeights {
    double alpha1 = 0.5;
    double alpha2 = 0.5;
    /// Set when both inputs to adaptive_weights were zero.
    bool degenerate = false;
};

struct PoolBounds {
    double u_s = 0.0;
    double u_d = 0.0;
};

/// 1 + m' G^-1 m.
double d_increment(const DesignState& state, const Eigen::Ref<const Eigen::VectorXd>& m);

/// Minimum squared Euclidean distance from x to the selected points.
double min_distance(const DesignPoint& x, std::span<const DesignPoint> selected);

/// Pool maxima of the mean squared distance (U_S) and of d_increment (U_D)
/// over available candidates. `surrogate_rows` has one row per pool point.
PoolBounds pool_bounds(const CandidatePool& pool, const DesignState& state,
                       const Eigen::MatrixXd& surrogate_rows, Exec exec = Exec::Parallel);

/// alpha1 = tau2_cv / (tau2_cv + sigma2_hat), alpha2 = 1 - alpha1.
AcdsWeights adaptive_weights(double sigma2_hat, double tau2_cv);

double acds_score(const DesignPoint& candidate, const Eigen::Ref<const Eigen::VectorXd>& m,
                  const DesignState& state, const AcdsWeights& weights, double u_s, double u_d);

/// Greedy batch selection by the combined criterion. Selected candidates are
/// marked unavailable, appended to the state and folded into G^-1. Returns pool
/// indices in selection order.
std::vector<Index> select_batch(CandidatePool& pool, DesignState& state, const Eigen::MatrixXd& surrogate_rows,
                                const AcdsWeights& weights, Index batch_size, Exec exec = Exec::Parallel);

/// Same, computing the surrogate rows of the pool from GP models first.
std::vector<DesignPoint> select_batch(CandidatePool& pool, DesignState& state,
                                      std::span<const gp::GpModel> models, const basis::BasisLibrary& lib,
                                      const AcdsWeights& weights, Index batch_size, Exec exec = Exec::Parallel);

/// Functional form of DesignState::rank1_update.
DesignState rank1_update(DesignState state, const Eigen::Ref<const Eigen::VectorXd>& m);

/// Mean over responses of sigma2_hat_r / s2_r.
double noise_to_signal_rho(std::span<const double> sigma2_hats, std::span<const double> response_variances);
double noise_to_signal_rho(double sigma2_hat, double response_variance);

namespace kernels {

/// Folds the squared distances from every pool row to `x` into running
/// minimum and sum arrays.
void accumulate_distances(const Eigen::MatrixXd& coords, const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::VectorXd& min_d2, Eigen::VectorXd& sum_d2, Exec exec);

/// out[i] = 1 + m_i' G^-1 m_i for the listed candidates; rows_t holds one
/// candidate per column.
void d_increments(const Eigen::MatrixXd& rows_t, const Eigen::MatrixXd& gram_inverse,
                  std::span<const Index> candidates, Eigen::VectorXd& out, Exec exec);

} // namespace kernels

} // namespace acds::design

#endif // ACDS_DESIGN_HPP
