#ifndef ACDS_SIMULATORS_HPP
#define ACDS_SIMULATORS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "acds/activelearn.hpp"
#include "acds/basis.hpp"
#include "acds/core.hpp"

namespace acds::sim {

/// dy/dt = C' m(y) with m the monomials of y up to `max_degree` (constant first).
struct OdeSpec {
    int d = 2;
    int max_degree = 1;
    /// (number of monomials) x d.
    Eigen::MatrixXd coefficients;
    Eigen::VectorXd initial;
    double horizon = 30.0;

    void validate() const;
    Eigen::VectorXd rhs(const Eigen::VectorXd& y) const;
    /// Truth over build_monomial_library(d, degree) for degree >= max_degree.
    SystemEstimate truth(int library_degree) const;
};

/// dy1 = -a y1 + b y2, dy2 = -b y1 - a y2.
OdeSpec rotation_system(double a, double b, Eigen::Vector2d y0 = {2.0, 0.0}, double horizon = 30.0);

/// Observations at eval_times (any order, within [0, horizon]); dy/dt evaluated from the RHS.
std::vector<Observation> solve_linear_ode(const OdeSpec& spec, std::span<const double> eval_times);

/// a ~ U[0.5, 1.5], b ~ U[2, 3].
OdeSpec sample_random_coeff_system(std::mt19937_64& rng);

/// F(t) and dF/dt for the Bass diffusion model.
std::pair<double, double> bass_solution(double p, double q, double t);

/// Uniform grid description. Two-dimensional when ny > 1.
struct PdeGrid {
    double x_lo = 0.0;
    double x_hi = 1.0;
    Index nx = 2;
    double y_lo = 0.0;
    double y_hi = 0.0;
    Index ny = 1;
    double dt = 1e-3;

    double dx() const { return (x_hi - x_lo) / static_cast<double>(nx - 1); }
    double dy() const { return ny > 1 ? (y_hi - y_lo) / static_cast<double>(ny - 1) : 0.0; }
    double x(Index i) const { return x_lo + static_cast<double>(i) * dx(); }
    double y(Index j) const { return y_lo + static_cast<double>(j) * dy(); }
    void validate() const;
};

struct BurgersParams {
    double lambda1 = 1.0;
    /// Viscosity: u_t = -lambda1 u u_x + nu u_xx.
    double nu = 0.01;
};

/// Field and finite-difference derivatives at all grid nodes at one time level.
struct BurgersSnapshot {
    PdeGrid grid;
    double t = 0.0;
    int substeps = 1;
    Eigen::VectorXd u;
    Eigen::VectorXd u_x;
    Eigen::VectorXd u_xx;
    Eigen::VectorXd u_t;
};

/// Method of lines with second-order central differences and forward Euler,
/// Dirichlet-zero ends. Each reporting step dt is split into substeps small
/// enough for stability; u_t is the semi-discrete right-hand side.
BurgersSnapshot solve_burgers(const std::function<double(double)>& initial, const PdeGrid& grid,
                              double t_snapshot, const BurgersParams& params = {});

double burgers_initial(double x);

/// Field layout: value at (x_i, y_j) stored at j * nx + i.
struct DiffusionSnapshot {
    PdeGrid grid;
    double t = 0.0;
    Eigen::VectorXd c;
    Eigen::VectorXd c_x;
    Eigen::VectorXd c_y;
    Eigen::VectorXd c_xx;
    Eigen::VectorXd c_yy;
    Eigen::VectorXd c_xy;
    Eigen::VectorXd c_t;

    Index index(Index i, Index j) const { return j * grid.nx + i; }
};

/// FTCS for c_t = D (c_xx + c_yy) with zero boundary values. c_t is the forward
/// difference from the snapshot level; derivatives at edge nodes use zero ghosts.
DiffusionSnapshot solve_diffusion_2d(const std::function<double(double, double)>& initial, const PdeGrid& grid,
                                     double t_snapshot, double diffusivity = 1.0);

/// Sum of two bivariate normal densities with means (3,5), (7,5) and
/// covariance [0.25 0.3; 0.3 1].
double two_source_initial(double x, double y);

void write_snapshot(std::ostream& os, const DiffusionSnapshot& s);
DiffusionSnapshot read_snapshot(std::istream& is);

enum class NoiseTarget { TIME_DERIVATIVE, STATE };

/// Adds i.i.d. N(0, sigma2) to the targeted field of every observation.
std::vector<Observation> add_noise(std::vector<Observation> obs, double sigma2, NoiseTarget target,
                                   std::mt19937_64& rng);

/// Oracle over a precomputed noiseless table; noise is drawn at query time
/// from its own generator.
class TabulatedOracle : public activelearn::DataOracle {
public:
    TabulatedOracle(std::vector<Observation> table, double sigma2, NoiseTarget target, std::uint64_t seed);

    std::vector<Observation> query(std::span<const DesignPoint> points) override;
    const Observation& noiseless(const DesignPoint& x) const;
    std::size_t size() const { return table_.size(); }

private:
    std::vector<Observation> table_;
    std::vector<std::size_t> order_;
    double sigma2_;
    NoiseTarget target_;
    std::mt19937_64 rng_;
};

enum class StudyKind { ODE_LINEAR, ODE_RANDOM, BASS, BURGERS, DIFFUSION_2D };

std::string to_string(StudyKind k);
/// Case-insensitive; throws std::invalid_argument.
StudyKind parse_study(const std::string& s);

/// Everything needed to run one problem instance of a case study.
struct Study {
    StudyKind kind = StudyKind::ODE_LINEAR;
    basis::BasisLibrary library;
    CandidatePool pool;
    /// Noiseless observation at every pool point, in pool order.
    std::vector<Observation> table;
    SystemEstimate truth;
    NoiseTarget noise_target = NoiseTarget::TIME_DERIVATIVE;
    /// Case-study defaults for tol, n_max, batch_size, n_init, fixed_n, initial design.
    activelearn::RunConfig defaults;
    std::vector<double> default_sigma2;
};

/// Builds a problem instance. problem_seed drives random coefficients (ODE_RANDOM, BASS)
/// and is ignored otherwise.
Study make_study(StudyKind kind, std::uint64_t problem_seed = 0);

/// The 27-term second-order library for a 2-D scalar field without the constant.
basis::BasisLibrary diffusion_library();

} // namespace acds::sim

#endif // ACDS_SIMULATORS_HPP
