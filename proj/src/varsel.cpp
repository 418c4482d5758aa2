#include "acds/varsel.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <boost/math/distributions/students_t.hpp>

namespace acds::varsel {

namespace {

// RSS below this fraction of ||y||^2 is treated as an exact fit; it also floors
// the BIC so that round-off cannot buy further terms.
constexpr double kExactFitFraction = 1e-24;
// Squared norm of a unit column after projecting out the selected span below
// which the column counts as collinear.
constexpr double kCollinearTol = 1e-10;

struct LeastSquares {
    Eigen::VectorXd beta;
    double rss = 0.0;
};

Eigen::MatrixXd selected_columns(const Eigen::MatrixXd& m, const std::vector<Index>& sel)
{
    Eigen::MatrixXd out(m.rows(), static_cast<Index>(sel.size()));
    for (std::size_t c = 0; c < sel.size(); ++c) {
        out.col(static_cast<Index>(c)) = m.col(sel[c]);
    }
    return out;
}

LeastSquares solve_selected(const RegressionProblem& problem, const std::vector<Index>& sel)
{
    LeastSquares ls;
    if (sel.empty()) {
        ls.rss = problem.response.squaredNorm();
        return ls;
    }
    const Eigen::MatrixXd ms = selected_columns(problem.model_matrix, sel);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ms);
    ls.beta = qr.solve(problem.response);
    ls.rss = (problem.response - ms * ls.beta).squaredNorm();
    return ls;
}

} // namespace

void RegressionProblem::validate() const
{
    if (model_matrix.rows() < 1 || model_matrix.cols() < 1) {
        throw DimensionError("RegressionProblem: empty model matrix");
    }
    if (model_matrix.rows() != response.size()) {
        throw DimensionError("RegressionProblem: response length differs from row count");
    }
    if (!model_matrix.allFinite() || !response.allFinite()) {
        throw DomainError("RegressionProblem: non-finite entries");
    }
}

double bic(double rss, Index n, Index q)
{
    const double nn = static_cast<double>(n);
    return nn * std::log(rss / nn) + static_cast<double>(q) * std::log(nn);
}

EstimatedEquation forward_stepwise_bic(const RegressionProblem& problem)
{
    problem.validate();
    const Index n = problem.rows();
    const Index k = problem.cols();
    const Eigen::VectorXd& y = problem.response;
    const double yy = y.squaredNorm();

    EstimatedEquation eq;
    eq.coefficients = Eigen::VectorXd::Zero(k);
    if (!(yy > 0.0)) {
        return eq;
    }
    const double rss_floor = kExactFitFraction * yy;
    auto floored_bic = [&](double rss, Index q) { return bic(std::max(rss, rss_floor), n, q); };

    Eigen::VectorXd col_norm = problem.model_matrix.colwise().norm().transpose();
    std::vector<char> in_model(static_cast<std::size_t>(k), 0);
    std::vector<Index> selected;
    Eigen::MatrixXd basis(n, 0);
    Eigen::VectorXd resid = y;
    double rss = yy;
    double current = floored_bic(rss, 0);

    while (static_cast<Index>(selected.size()) + 1 < n && rss > rss_floor) {
        Index best = -1;
        double best_rss = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_dir;
        for (Index j = 0; j < k; ++j) {
            if (in_model[static_cast<std::size_t>(j)] != 0 || !(col_norm[j] > 0.0)) {
                continue;
            }
            Eigen::VectorXd c = problem.model_matrix.col(j) / col_norm[j];
            if (basis.cols() > 0) {
                // Two passes of Gram-Schmidt keep the projection orthogonal.
                c -= basis * (basis.transpose() * c);
                c -= basis * (basis.transpose() * c);
            }
            const double nn = c.squaredNorm();
            if (nn < kCollinearTol) {
                continue;
            }
            const double proj = c.dot(resid);
            const double cand = std::max(rss - proj * proj / nn, 0.0);
            if (cand < best_rss) {
                best_rss = cand;
                best = j;
                best_dir = c / std::sqrt(nn);
            }
        }
        if (best < 0) {
            break;
        }
        const Index q = static_cast<Index>(selected.size()) + 1;
        const double next = floored_bic(best_rss, q);
        if (!(next < current)) {
            break;
        }
        current = next;
        selected.push_back(best);
        in_model[static_cast<std::size_t>(best)] = 1;
        basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
        basis.col(basis.cols() - 1) = best_dir;
        resid -= best_dir * best_dir.dot(resid);
        rss = resid.squaredNorm();
    }

    std::sort(selected.begin(), selected.end());
    const LeastSquares ls = solve_selected(problem, selected);
    for (std::size_t c = 0; c < selected.size(); ++c) {
        eq.coefficients[selected[c]] = ls.beta[static_cast<Index>(c)];
    }
    // A coefficient can only be exactly zero by accident; keep the support honest.
    for (Index j : selected) {
        if (eq.coefficients[j] != 0.0) {
            eq.selected_indices.push_back(j);
        }
    }
    const Index q = static_cast<Index>(selected.size());
    eq.sigma2_hat = n > q ? ls.rss / static_cast<double>(n - q) : 0.0;
    return eq;
}

std::vector<CoefficientInterval> coefficient_confidence_intervals(const RegressionProblem& problem,
                                                                  const EstimatedEquation& eq, double level)
{
    problem.validate();
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("coefficient_confidence_intervals: level must lie in (0, 1)");
    }
    if (eq.size() != problem.cols()) {
        throw DimensionError("coefficient_confidence_intervals: equation does not match problem");
    }
    const auto& sel = eq.selected_indices;
    const Index q = static_cast<Index>(sel.size());
    const Index n = problem.rows();
    if (q == 0) {
        return {};
    }
    if (n - q <= 0) {
        throw DomainError("coefficient_confidence_intervals: no residual degrees of freedom");
    }
    const Eigen::MatrixXd ms = selected_columns(problem.model_matrix, sel);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(ms);
    if (qr.rank() < q) {
        throw ConditioningError("coefficient_confidence_intervals: selected columns are singular");
    }
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(q, q).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(q, q));
    const Eigen::MatrixXd cov_perm = rinv * rinv.transpose();
    const Eigen::MatrixXd cov = qr.colsPermutation() * cov_perm * qr.colsPermutation().transpose();

    const boost::math::students_t dist(static_cast<double>(n - q));
    const double tq = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
    std::vector<CoefficientInterval> out;
    out.reserve(static_cast<std::size_t>(q));
    for (Index c = 0; c < q; ++c) {
        CoefficientInterval ci;
        ci.term = sel[static_cast<std::size_t>(c)];
        ci.estimate = eq.coefficients[ci.term];
        const double half = tq * std::sqrt(std::max(eq.sigma2_hat * cov(c, c), 0.0));
        ci.low = ci.estimate - half;
        ci.high = ci.estimate + half;
        out.push_back(ci);
    }
    return out;
}

} // namespace acds::varsel
