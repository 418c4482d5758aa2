#ifndef ACDS_GP_HPP
#define ACDS_GP_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "acds/core.hpp"

namespace acds::gp {

/// Constant mean, signal variance, per-dimension bandwidths and nugget of an
/// anisotropic squared-exponential GP. All values are in the caller's units.
struct GpHyperparams {
    double mu = 0.0;
    double tau2 = 1.0;
    Eigen::VectorXd omega;
    double sigma0_2 = 0.0;

    Index dim() const { return omega.size(); }
    void validate() const;
};

struct FitConfig {
    int n_starts = 8;
    std::uint64_t seed = 0;
    bool estimate_nugget = true;
    /// Bounds on sigma0^2 / tau^2 when the nugget is estimated.
    double nugget_ratio_min = 1e-8;
    double nugget_ratio_max = 1.0;
    /// log(omega_s) is boxed to [log(lo * range_s^2), log(hi * range_s^2)].
    double omega_lower_factor = 1e-3;
    double omega_upper_factor = 1e3;
    int max_iterations = 400;
    double simplex_size_tol = 1e-4;
    /// Optional previous optimum used as the first start.
    std::optional<GpHyperparams> warm_start;
};

struct FitDiagnostics {
    /// Concentrated log-likelihood (standardized scale) at each start point.
    std::vector<double> start_loglik;
    /// Concentrated log-likelihood at each local optimum.
    std::vector<double> final_loglik;
    double best_loglik = 0.0;
    int objective_evaluations = 0;
};

/// Predictor value with its gradient and Hessian at one query point.
struct SurrogateValues {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

/// A conditioned GP: immutable once built and safe to share across threads.
class GpModel {
public:
    /// Conditions a GP on data at fixed hyperparameters. With profile_mean the
    /// supplied mu is replaced by 1'K^-1 y / 1'K^-1 1.
    static GpModel condition(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                             GpHyperparams hyperparams, bool profile_mean = false);

    const GpHyperparams& hyperparams() const { return hyperparams_; }
    const Eigen::MatrixXd& train_inputs() const { return inputs_; }
    const Eigen::VectorXd& train_outputs() const { return outputs_; }
    /// K~^-1 (y - mu 1).
    const Eigen::VectorXd& solve_vector() const { return solve_; }
    /// Diagonal jitter added on top of sigma0^2 to make K~ factorizable.
    double jitter() const { return jitter_; }
    Index size() const { return inputs_.rows(); }
    Index dim() const { return inputs_.cols(); }

    /// K + (sigma0^2 + jitter) I.
    Eigen::MatrixXd kernel_matrix() const;
    Eigen::MatrixXd kernel_inverse() const;
    Eigen::VectorXd kernel_inverse_diagonal() const;
    const Eigen::LLT<Eigen::MatrixXd>& factorization() const { return llt_; }

    const FitDiagnostics& diagnostics() const { return diagnostics_; }
    void set_diagnostics(FitDiagnostics d) { diagnostics_ = std::move(d); }

private:
    GpHyperparams hyperparams_;
    Eigen::MatrixXd inputs_;
    Eigen::VectorXd outputs_;
    Eigen::VectorXd solve_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
    FitDiagnostics diagnostics_;
};

double kernel(const DesignPoint& a, const DesignPoint& b, const GpHyperparams& h);
double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GpHyperparams& h);

/// Covariance matrix without the nugget.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& inputs, const GpHyperparams& h);

/// Stacks design points into an (n x p) matrix.
Eigen::MatrixXd to_matrix(std::span<const DesignPoint> points);

/// Maximum-likelihood fit with profiled mean; multistart Nelder-Mead on log scale.
GpModel fit(std::span<const DesignPoint> inputs, const Eigen::VectorXd& outputs,
            const FitConfig& config = {});
GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
            const FitConfig& config = {});

/// log L = -0.5 [ (y-mu)'K~^-1(y-mu) + log det K~ + n log(2 pi) ].
double log_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                      const GpHyperparams& h);

double predict(const GpModel& model, const DesignPoint& query);
/// d yhat / d x_j, j zero-based.
double predict_deriv1(const GpModel& model, const DesignPoint& query, Index j);
/// d^2 yhat / d x_l d x_j, zero-based indices.
double predict_deriv2(const GpModel& model, const DesignPoint& query, Index l, Index j);
SurrogateValues evaluate(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& query);

/// y_i - yhat_{-i}(x_i) at fixed hyperparameters, via the Dubrule shortcut.
Eigen::VectorXd loo_residuals(const GpModel& model);
/// Mean squared leave-one-out residual.
double loo_cv_error(const GpModel& model);

} // namespace acds::gp

#endif // ACDS_GP_HPP
