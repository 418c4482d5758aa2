#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/LU>
#include <Eigen/QR>

#include "acds/varsel.hpp"

using namespace acds;
using namespace acds::varsel;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Index n, Index k)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(n, k);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < k; ++j) {
            m(i, j) = g(rng);
        }
    }
    return m;
}

double path_bic(const RegressionProblem& pr, const std::vector<Index>& cols)
{
    if (cols.empty()) {
        return bic(pr.response.squaredNorm(), pr.rows(), 0);
    }
    Eigen::MatrixXd s(pr.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        s.col(static_cast<Index>(j)) = pr.model_matrix.col(cols[j]);
    }
    const Eigen::VectorXd b = s.colPivHouseholderQr().solve(pr.response);
    return bic((pr.response - s * b).squaredNorm(), pr.rows(), static_cast<Index>(cols.size()));
}

} // namespace

TEST_CASE("bic formula")
{
    CHECK(bic(2.0, 10, 3) == doctest::Approx(10.0 * std::log(0.2) + 3.0 * std::log(10.0)));
}

TEST_CASE("noiseless single-term recovery")
{
    std::mt19937_64 rng(1);
    RegressionProblem pr;
    pr.model_matrix = random_matrix(rng, 50, 3);
    pr.model_matrix.col(0).setOnes();
    pr.response = 2.0 * pr.model_matrix.col(1);
    const auto eq = forward_stepwise_bic(pr);
    CHECK(eq.selected_indices == std::vector<Index>{1});
    CHECK(std::abs(eq.coefficients[1] - 2.0) <= 1e-10);
    CHECK(eq.coefficients[0] == 0.0);
    CHECK(eq.coefficients[2] == 0.0);
    CHECK(eq.sigma2_hat <= 1e-20);
}

TEST_CASE("zero response selects nothing")
{
    std::mt19937_64 rng(2);
    RegressionProblem pr;
    pr.model_matrix = random_matrix(rng, 20, 4);
    pr.response = Eigen::VectorXd::Zero(20);
    const auto eq = forward_stepwise_bic(pr);
    CHECK(eq.coefficients.cwiseAbs().maxCoeff() == 0.0);
    CHECK(eq.sigma2_hat == 0.0);
}

TEST_CASE("constant response gives an intercept model")
{
    std::mt19937_64 rng(3);
    RegressionProblem pr;
    pr.model_matrix = random_matrix(rng, 30, 4);
    pr.model_matrix.col(0).setOnes();
    pr.response = Eigen::VectorXd::Constant(30, 1.7);
    const auto eq = forward_stepwise_bic(pr);
    CHECK(eq.selected_indices == std::vector<Index>{0});
    CHECK(eq.coefficients[0] == doctest::Approx(1.7).epsilon(1e-12));
}

TEST_CASE("collinear candidates are skipped")
{
    std::mt19937_64 rng(4);
    RegressionProblem pr;
    pr.model_matrix = random_matrix(rng, 40, 4);
    pr.model_matrix.col(3) = 2.0 * pr.model_matrix.col(1);
    pr.response = pr.model_matrix.col(1) - 0.5 * pr.model_matrix.col(2);
    const auto eq = forward_stepwise_bic(pr);
    CHECK(eq.selected_indices.size() == 2);
    CHECK(std::find(eq.selected_indices.begin(), eq.selected_indices.end(), 2) != eq.selected_indices.end());
}

TEST_CASE("exact support recovery on random noiseless instances")
{
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> kd(3, 10);
    std::normal_distribution<double> g(0.0, 1.0);
    int exact_count = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const Index k = kd(rng);
        const Index n = 3 * k + 2;
        RegressionProblem pr;
        pr.model_matrix = random_matrix(rng, n, k);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
        for (Index j = 0; j < k; j += 2) {
            beta[j] = (g(rng) > 0 ? 1.0 : -1.0) * (0.5 + std::abs(g(rng)));
        }
        pr.response = pr.model_matrix * beta;
        const auto eq = forward_stepwise_bic(pr);
        bool exact = true;
        for (Index j = 0; j < k; ++j) {
            if (beta[j] != 0.0) {
                CHECK(eq.coefficients[j] != 0.0);
            }
            exact = exact && (eq.coefficients[j] != 0.0) == (beta[j] != 0.0);
        }
        CHECK((eq.coefficients - beta).cwiseAbs().maxCoeff() <= 1e-8);
        exact_count += exact ? 1 : 0;
    }
    // Greedy entry can admit a null column before the last true one; its
    // refitted coefficient is then zero to rounding.
    CHECK(exact_count >= 28);
}

TEST_CASE("stepwise path properties on noisy data")
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        RegressionProblem pr;
        pr.model_matrix = random_matrix(rng, 60, 8);
        pr.response = 1.5 * pr.model_matrix.col(2) - pr.model_matrix.col(5);
        for (Index i = 0; i < 60; ++i) {
            pr.response[i] += 0.3 * g(rng);
        }
        const auto eq = forward_stepwise_bic(pr);
        CHECK(path_bic(pr, eq.selected_indices) <= path_bic(pr, {}));

        const Eigen::VectorXd r = pr.response - pr.model_matrix * eq.coefficients;
        const double q = static_cast<double>(eq.selected_indices.size());
        CHECK(eq.sigma2_hat == doctest::Approx(r.squaredNorm() / (60.0 - q)).epsilon(1e-10));
        for (Index j : eq.selected_indices) {
            CHECK(std::abs(pr.model_matrix.col(j).dot(r)) <= 1e-8 * pr.model_matrix.norm() * r.norm());
        }

        const auto ci = coefficient_confidence_intervals(pr, eq);
        CHECK(ci.size() == eq.selected_indices.size());
        for (const auto& c : ci) {
            CHECK(c.low <= c.estimate);
            CHECK(c.estimate <= c.high);
            CHECK(c.estimate == eq.coefficients[c.term]);
        }
    }
}

TEST_CASE("confidence intervals match the textbook formula")
{
    // Two-column fit on five rows; t quantile t_{3, 0.975} = 3.182446305284263.
    RegressionProblem pr;
    pr.model_matrix.resize(5, 2);
    pr.model_matrix << 1, 0, 1, 1, 1, 2, 1, 3, 1, 4;
    pr.response = (Eigen::VectorXd(5) << 0.1, 1.1, 1.9, 3.2, 3.9).finished();
    EstimatedEquation eq;
    eq.selected_indices = {0, 1};
    const Eigen::VectorXd b = pr.model_matrix.colPivHouseholderQr().solve(pr.response);
    eq.coefficients = b;
    eq.sigma2_hat = (pr.response - pr.model_matrix * b).squaredNorm() / 3.0;
    const auto ci = coefficient_confidence_intervals(pr, eq);
    const Eigen::MatrixXd cov = (pr.model_matrix.transpose() * pr.model_matrix).inverse() * eq.sigma2_hat;
    for (int j = 0; j < 2; ++j) {
        CHECK(ci[j].high - ci[j].estimate == doctest::Approx(3.182446305284263 * std::sqrt(cov(j, j))).epsilon(1e-10));
    }

    eq.sigma2_hat = 0.0;
    for (const auto& c : coefficient_confidence_intervals(pr, eq)) {
        CHECK(c.low == c.high);
    }
}
