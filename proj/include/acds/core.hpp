#ifndef ACDS_CORE_HPP
#define ACDS_CORE_HPP

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace acds {

using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a matrix that must be positive definite (or nonsingular) is not.
class ConditioningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapabilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A location in the design space: spatial coordinates for PDEs, time for ODEs.
class DesignPoint {
public:
    DesignPoint() = default;
    explicit DesignPoint(Eigen::VectorXd coords);
    DesignPoint(std::initializer_list<double> coords);

    static DesignPoint scalar(double t) { return DesignPoint{t}; }

    Index dim() const { return coords_.size(); }
    double operator[](Index s) const { return coords_[s]; }
    const Eigen::VectorXd& coords() const { return coords_; }

    friend bool operator==(const DesignPoint& a, const DesignPoint& b);
    /// Lexicographic on coordinates; used for lookup tables.
    friend bool operator<(const DesignPoint& a, const DesignPoint& b);

private:
    Eigen::VectorXd coords_;
};

/// Partial-derivative multi-index: entry s is the differentiation order in x_s.
using MultiIndex = std::vector<int>;

int total_order(const MultiIndex& alpha);

struct Observation {
    DesignPoint point;
    Eigen::VectorXd state;
    Eigen::VectorXd time_derivative;
    std::map<MultiIndex, Eigen::VectorXd> spatial_derivatives;

    Index state_dim() const { return state.size(); }
    /// Throws DimensionError or DomainError when the invariants do not hold.
    void validate() const;
};

/// Finite set of potential design points with monotone availability flags.
class CandidatePool {
public:
    CandidatePool() = default;
    explicit CandidatePool(std::vector<DesignPoint> points);

    Index size() const { return static_cast<Index>(points_.size()); }
    Index dim() const { return points_.empty() ? 0 : points_.front().dim(); }
    const DesignPoint& point(Index i) const { return points_[static_cast<std::size_t>(i)]; }
    const std::vector<DesignPoint>& points() const { return points_; }

    bool is_available(Index i) const { return available_[static_cast<std::size_t>(i)] != 0; }
    Index available_count() const { return available_count_; }
    std::vector<Index> available_indices() const;

    /// Marks point i as selected. Selecting an unavailable point throws.
    void mark_selected(Index i);

    /// Pool coordinates as an (size x dim) matrix.
    const Eigen::MatrixXd& coordinate_matrix() const { return coords_; }

private:
    std::vector<DesignPoint> points_;
    std::vector<char> available_;
    Index available_count_ = 0;
    Eigen::MatrixXd coords_;
};

/// Sparse coefficient vector for one response over a basis library.
struct EstimatedEquation {
    Eigen::VectorXd coefficients;
    double sigma2_hat = 0.0;
    std::vector<Index> selected_indices;

    Index size() const { return coefficients.size(); }

    /// Builds an equation whose support is exactly the nonzero entries.
    static EstimatedEquation from_coefficients(Eigen::VectorXd beta, double sigma2_hat = 0.0);
};

/// One equation per response (state dimension).
using SystemEstimate = std::vector<EstimatedEquation>;

struct Metrics {
    std::int64_t gamma = 0;
    std::int64_t false_positives = 0;
    std::int64_t false_negatives = 0;
    double l2_beta = 0.0;
    std::int64_t n_total = 0;
};

std::int64_t compute_gamma(const EstimatedEquation& estimated, const EstimatedEquation& truth);
std::int64_t compute_gamma(std::span<const EstimatedEquation> estimated,
                           std::span<const EstimatedEquation> truth);

double compute_l2_loss(const EstimatedEquation& estimated, const EstimatedEquation& truth);
/// Norm of the concatenated coefficient difference over all responses.
double compute_l2_loss(std::span<const EstimatedEquation> estimated,
                       std::span<const EstimatedEquation> truth);

Metrics compute_metrics(std::span<const EstimatedEquation> estimated,
                        std::span<const EstimatedEquation> truth, std::int64_t n_total);

/// Concatenated coefficients of a multi-response system.
Eigen::VectorXd stack_coefficients(std::span<const EstimatedEquation> system);

} // namespace acds

#endif // ACDS_CORE_HPP
