#ifndef ACDS_VARSEL_HPP
#define ACDS_VARSEL_HPP

#include <vector>

#include <Eigen/Core>

#include "acds/core.hpp"

namespace acds::varsel {

struct RegressionProblem {
    Eigen::MatrixXd model_matrix;
    Eigen::VectorXd response;

    Index rows() const { return model_matrix.rows(); }
    Index cols() const { return model_matrix.cols(); }
    void validate() const;
};

/// BIC = n log(RSS / n) + q log(n).
double bic(double rss, Index n, Index q);

/// Greedy forward selection: at each step add the candidate that lowers BIC
/// the most; stop when nothing lowers it strictly. Ties go to the lowest index.
EstimatedEquation forward_stepwise_bic(const RegressionProblem& problem);

struct CoefficientInterval {
    Index term = 0;
    double estimate = 0.0;
    double low = 0.0;
    double high = 0.0;
};

/// Student-t intervals on the selected coefficients.
std::vector<CoefficientInterval> coefficient_confidence_intervals(const RegressionProblem& problem,
                                                                  const EstimatedEquation& eq,
                                                                  double level = 0.95);

} // namespace acds::varsel

#endif // ACDS_VARSEL_HPP
