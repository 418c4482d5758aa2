#ifndef ACDS_ACTIVELEARN_HPP
#define ACDS_ACTIVELEARN_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "acds/basis.hpp"
#include "acds/core.hpp"
#include "acds/parallel.hpp"

namespace acds::activelearn {

enum class Criterion { ACDS, D_OPTIMAL_ONLY, MAXIMIN_ONLY };
enum class InitialDesign { Random, Stratified };
enum class ConvergenceReason { TOL_REACHED, N_MAX, FIXED_N };

std::string to_string(Criterion c);
std::string to_string(ConvergenceReason r);
/// Accepts "ACDS", "D_OPTIMAL_ONLY"/"DOPT", "MAXIMIN_ONLY"/"MAXIMIN" (case-insensitive).
Criterion parse_criterion(const std::string& s);

struct RunConfig {
    double tol = 1e-2;
    Index n_max = 480;
    Index batch_size = 16;
    Index n_init = 16;
    std::uint64_t seed = 0;
    Criterion criterion = Criterion::ACDS;
    /// Stop at exactly this many points, ignoring tol. The last batch is truncated.
    std::optional<Index> fixed_n;
    InitialDesign initial_design = InitialDesign::Random;
    /// Only start a batch when n + B <= n_max (default: loop while n <= n_max).
    bool strict_budget = false;
    /// Divide sigma2_hat and tau2_cv by their response variances before weighting.
    bool normalize_weights = false;
    /// GP multistarts on the first iteration and on warm-started later iterations.
    int gp_starts = 8;
    int gp_starts_warm = 3;
    Exec exec = Exec::Parallel;

    void validate() const;
};

struct IterationRecord {
    Index n = 0;
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double rho = 0.0;
    /// Stacked coefficients of all responses after this iteration's fit.
    Eigen::VectorXd beta;
    double sigma2_hat = 0.0;
    double tau2_cv = 0.0;
    bool weights_degenerate = false;
    std::vector<DesignPoint> batch;
};

struct RunRecord {
    std::vector<IterationRecord> iterations;
    /// Fit on every collected observation.
    SystemEstimate estimate;
    Metrics metrics;
    ConvergenceReason reason = ConvergenceReason::N_MAX;
    std::vector<DesignPoint> design;
    Index n_total = 0;
    bool aborted = false;
    std::string abort_message;

    bool converged() const { return reason == ConvergenceReason::TOL_REACHED; }
};

/// Source of observations at requested design points.
class DataOracle {
public:
    virtual ~DataOracle() = default;
    /// Returns one observation per point, in order. Throws OracleError on failure.
    virtual std::vector<Observation> query(std::span<const DesignPoint> points) = 0;
};

/// True iff ||beta_c - beta_o|| / ||beta_c|| < tol; an all-zero beta_c is never converged.
bool check_convergence(const Eigen::VectorXd& beta_current, const Eigen::VectorXd& beta_old, double tol);

/// Stepwise-BIC fit of every response on the observations.
SystemEstimate fit_system(const basis::BasisLibrary& lib, std::span<const Observation> obs);

/// Pool indices of an initial design.
std::vector<Index> initial_design(const CandidatePool& pool, Index n, InitialDesign kind, std::uint64_t seed);

/// Runs the active-learning loop. `pool` is copied. When `truth` is non-empty
/// the record's metrics are filled in.
RunRecord run(const RunConfig& config, DataOracle& oracle, const basis::BasisLibrary& lib, CandidatePool pool,
              std::span<const EstimatedEquation> truth = {});

} // namespace acds::activelearn

#endif // ACDS_ACTIVELEARN_HPP
