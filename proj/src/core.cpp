#include "acds/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace acds {

DesignPoint::DesignPoint(Eigen::VectorXd coords) : coords_(std::move(coords))
{
    if (coords_.size() < 1) {
        throw DimensionError("DesignPoint: dimension must be >= 1");
    }
    if (!coords_.allFinite()) {
        throw DomainError("DesignPoint: coordinates must be finite");
    }
}

DesignPoint::DesignPoint(std::initializer_list<double> coords)
    : DesignPoint(Eigen::Map<const Eigen::VectorXd>(coords.begin(), static_cast<Index>(coords.size())))
{
}

bool operator==(const DesignPoint& a, const DesignPoint& b)
{
    return a.coords_.size() == b.coords_.size() && a.coords_ == b.coords_;
}

bool operator<(const DesignPoint& a, const DesignPoint& b)
{
    return std::lexicographical_compare(a.coords_.begin(), a.coords_.end(), b.coords_.begin(),
                                        b.coords_.end());
}

int total_order(const MultiIndex& alpha)
{
    return std::accumulate(alpha.begin(), alpha.end(), 0);
}

void Observation::validate() const
{
    if (state.size() != time_derivative.size()) {
        throw DimensionError("Observation: state and time_derivative lengths differ");
    }
    if (!state.allFinite() || !time_derivative.allFinite()) {
        throw DomainError("Observation: non-finite value");
    }
    for (const auto& [alpha, values] : spatial_derivatives) {
        if (values.size() != state.size()) {
            throw DimensionError("Observation: derivative length differs from state length");
        }
        if (static_cast<Index>(alpha.size()) != point.dim()) {
            throw DimensionError("Observation: derivative multi-index has wrong dimension");
        }
        if (!values.allFinite()) {
            throw DomainError("Observation: non-finite derivative");
        }
    }
}

CandidatePool::CandidatePool(std::vector<DesignPoint> points)
    : points_(std::move(points)), available_(points_.size(), 1),
      available_count_(static_cast<Index>(points_.size()))
{
    if (points_.empty()) {
        return;
    }
    const Index p = points_.front().dim();
    for (const auto& pt : points_) {
        if (pt.dim() != p) {
            throw DimensionError("CandidatePool: points have inconsistent dimension");
        }
    }
    std::vector<std::size_t> order(points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return points_[a] < points_[b]; });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (points_[order[i]] == points_[order[i - 1]]) {
            throw DomainError("CandidatePool: duplicate design point");
        }
    }
    coords_.resize(static_cast<Index>(points_.size()), p);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        coords_.row(static_cast<Index>(i)) = points_[i].coords().transpose();
    }
}

std::vector<Index> CandidatePool::available_indices() const
{
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(available_count_));
    for (Index i = 0; i < size(); ++i) {
        if (is_available(i)) {
            out.push_back(i);
        }
    }
    return out;
}

void CandidatePool::mark_selected(Index i)
{
    if (i < 0 || i >= size()) {
        throw std::out_of_range("CandidatePool: index out of range");
    }
    auto& flag = available_[static_cast<std::size_t>(i)];
    if (flag == 0) {
        throw std::logic_error("CandidatePool: point already selected");
    }
    flag = 0;
    --available_count_;
}

EstimatedEquation EstimatedEquation::from_coefficients(Eigen::VectorXd beta, double sigma2_hat)
{
    EstimatedEquation eq;
    for (Index i = 0; i < beta.size(); ++i) {
        if (beta[i] != 0.0) {
            eq.selected_indices.push_back(i);
        }
    }
    eq.coefficients = std::move(beta);
    eq.sigma2_hat = sigma2_hat;
    return eq;
}

namespace {

void check_same_length(const EstimatedEquation& a, const EstimatedEquation& b)
{
    if (a.size() != b.size()) {
        throw DimensionError("coefficient vectors have different lengths");
    }
}

void check_same_responses(std::span<const EstimatedEquation> a, std::span<const EstimatedEquation> b)
{
    if (a.size() != b.size()) {
        throw DimensionError("systems have different numbers of responses");
    }
}

} // namespace

std::int64_t compute_gamma(const EstimatedEquation& estimated, const EstimatedEquation& truth)
{
    check_same_length(estimated, truth);
    std::int64_t count = 0;
    for (Index i = 0; i < estimated.size(); ++i) {
        const bool est = estimated.coefficients[i] != 0.0;
        const bool tru = truth.coefficients[i] != 0.0;
        count += (est != tru) ? 1 : 0;
    }
    return count;
}

std::int64_t compute_gamma(std::span<const EstimatedEquation> estimated,
                           std::span<const EstimatedEquation> truth)
{
    check_same_responses(estimated, truth);
    std::int64_t total = 0;
    for (std::size_t r = 0; r < estimated.size(); ++r) {
        total += compute_gamma(estimated[r], truth[r]);
    }
    return total;
}

double compute_l2_loss(const EstimatedEquation& estimated, const EstimatedEquation& truth)
{
    check_same_length(estimated, truth);
    return (estimated.coefficients - truth.coefficients).norm();
}

double compute_l2_loss(std::span<const EstimatedEquation> estimated,
                       std::span<const EstimatedEquation> truth)
{
    check_same_responses(estimated, truth);
    double sq = 0.0;
    for (std::size_t r = 0; r < estimated.size(); ++r) {
        check_same_length(estimated[r], truth[r]);
        sq += (estimated[r].coefficients - truth[r].coefficients).squaredNorm();
    }
    return std::sqrt(sq);
}

Metrics compute_metrics(std::span<const EstimatedEquation> estimated,
                        std::span<const EstimatedEquation> truth, std::int64_t n_total)
{
    check_same_responses(estimated, truth);
    Metrics m;
    for (std::size_t r = 0; r < estimated.size(); ++r) {
        check_same_length(estimated[r], truth[r]);
        for (Index i = 0; i < estimated[r].size(); ++i) {
            const bool est = estimated[r].coefficients[i] != 0.0;
            const bool tru = truth[r].coefficients[i] != 0.0;
            m.false_positives += (est && !tru) ? 1 : 0;
            m.false_negatives += (!est && tru) ? 1 : 0;
        }
    }
    m.gamma = m.false_positives + m.false_negatives;
    m.l2_beta = compute_l2_loss(estimated, truth);
    m.n_total = n_total;
    return m;
}

Eigen::VectorXd stack_coefficients(std::span<const EstimatedEquation> system)
{
    Index total = 0;
    for (const auto& eq : system) {
        total += eq.size();
    }
    Eigen::VectorXd out(total);
    Index offset = 0;
    for (const auto& eq : system) {
        out.segment(offset, eq.size()) = eq.coefficients;
        offset += eq.size();
    }
    return out;
}

} // namespace acds
