#include "acds/simulators.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>

#include <boost/numeric/odeint.hpp>

namespace acds::sim {

namespace odeint = boost::numeric::odeint;

void OdeSpec::validate() const
{
    if (d < 1 || max_degree < 1) {
        throw DimensionError("OdeSpec: d and max_degree must be >= 1");
    }
    const basis::BasisLibrary lib = basis::build_monomial_library(d, max_degree);
    if (coefficients.rows() != lib.size() || coefficients.cols() != d) {
        throw DimensionError("OdeSpec: coefficient matrix must be (monomials x d)");
    }
    if (initial.size() != d) {
        throw DimensionError("OdeSpec: initial condition length differs from d");
    }
    if (!coefficients.allFinite() || !initial.allFinite()) {
        throw DomainError("OdeSpec: non-finite coefficients or initial condition");
    }
    if (!(horizon > 0.0)) {
        throw DomainError("OdeSpec: horizon must be positive");
    }
}

namespace {

// Monomials of y in build_monomial_library order.
Eigen::VectorXd monomials(const basis::BasisLibrary& lib, const Eigen::VectorXd& y)
{
    Eigen::VectorXd m(lib.size());
    for (Index i = 0; i < lib.size(); ++i) {
        double v = 1.0;
        for (int f : lib.term(i).factors) {
            v *= y[lib.atoms()[static_cast<std::size_t>(f)].index];
        }
        m[i] = v;
    }
    return m;
}

} // namespace

Eigen::VectorXd OdeSpec::rhs(const Eigen::VectorXd& y) const
{
    const basis::BasisLibrary lib = basis::build_monomial_library(d, max_degree);
    return coefficients.transpose() * monomials(lib, y);
}

SystemEstimate OdeSpec::truth(int library_degree) const
{
    if (library_degree < max_degree) {
        throw DimensionError("OdeSpec::truth: library degree below the system degree");
    }
    const basis::BasisLibrary small = basis::build_monomial_library(d, max_degree);
    const basis::BasisLibrary big = basis::build_monomial_library(d, library_degree);
    SystemEstimate out;
    for (int r = 0; r < d; ++r) {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(big.size());
        for (Index i = 0; i < small.size(); ++i) {
            beta[big.index_of(small.term(i).display_name)] = coefficients(i, r);
        }
        out.push_back(EstimatedEquation::from_coefficients(std::move(beta)));
    }
    return out;
}

OdeSpec rotation_system(double a, double b, Eigen::Vector2d y0, double horizon)
{
    OdeSpec s;
    s.d = 2;
    s.max_degree = 1;
    // Terms: 1, u1, u2.
    s.coefficients = Eigen::MatrixXd::Zero(3, 2);
    s.coefficients(1, 0) = -a;
    s.coefficients(2, 0) = b;
    s.coefficients(1, 1) = -b;
    s.coefficients(2, 1) = -a;
    s.initial = y0;
    s.horizon = horizon;
    return s;
}

std::vector<Observation> solve_linear_ode(const OdeSpec& spec, std::span<const double> eval_times)
{
    spec.validate();
    const basis::BasisLibrary lib = basis::build_monomial_library(spec.d, spec.max_degree);
    for (double t : eval_times) {
        if (!(t >= 0.0 && t <= spec.horizon)) {
            throw DomainError("solve_linear_ode: evaluation time outside [0, horizon]");
        }
    }
    std::vector<double> times(eval_times.begin(), eval_times.end());
    times.push_back(0.0);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    using State = std::vector<double>;
    const Eigen::MatrixXd ct = spec.coefficients.transpose();
    auto system = [&](const State& y, State& dy, double) {
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Index>(y.size()));
        const Eigen::VectorXd f = ct * monomials(lib, yv);
        for (std::size_t r = 0; r < dy.size(); ++r) {
            dy[r] = f[static_cast<Index>(r)];
        }
    };
    State y(spec.initial.data(), spec.initial.data() + spec.initial.size());
    std::vector<State> states;
    states.reserve(times.size());
    try {
        auto stepper = odeint::make_dense_output(1e-12, 1e-12, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_times(stepper, system, y, times.begin(), times.end(), 1e-3,
                                [&](const State& s, double) { states.push_back(s); });
    } catch (const std::exception& e) {
        throw SolverError(std::string("solve_linear_ode: integration failed: ") + e.what());
    }
    if (states.size() != times.size()) {
        throw SolverError("solve_linear_ode: integrator returned too few states");
    }

    std::vector<Observation> out;
    out.reserve(eval_times.size());
    for (double t : eval_times) {
        const auto pos = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
        Observation o;
        o.point = DesignPoint::scalar(t);
        o.state = Eigen::Map<const Eigen::VectorXd>(states[pos].data(), spec.d);
        o.time_derivative = ct * monomials(lib, o.state);
        out.push_back(std::move(o));
    }
    return out;
}

OdeSpec sample_random_coeff_system(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> ua(0.5, 1.5);
    std::uniform_real_distribution<double> ub(2.0, 3.0);
    const double a = ua(rng);
    const double b = ub(rng);
    return rotation_system(a, b);
}

std::pair<double, double> bass_solution(double p, double q, double t)
{
    if (!(p > 0.0)) {
        throw DomainError("bass_solution: p must be positive");
    }
    if (!(q >= 0.0) || !(t >= 0.0)) {
        throw DomainError("bass_solution: need q >= 0 and t >= 0");
    }
    const double e = std::exp(-(p + q) * t);
    const double f = (1.0 - e) / (1.0 + (q / p) * e);
    return {f, (1.0 - f) * (p + q * f)};
}

void PdeGrid::validate() const
{
    if (nx < 3 || !(x_hi > x_lo) || !std::isfinite(x_lo) || !std::isfinite(x_hi)) {
        throw DomainError("PdeGrid: need nx >= 3 and x_hi > x_lo");
    }
    if (ny > 1 && (ny < 3 || !(y_hi > y_lo))) {
        throw DomainError("PdeGrid: need ny >= 3 and y_hi > y_lo for a 2-D grid");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw DomainError("PdeGrid: dt must be positive");
    }
}

namespace {

Index time_levels(double t_snapshot, double dt)
{
    if (!(t_snapshot >= 0.0)) {
        throw DomainError("snapshot time must be nonnegative");
    }
    const double steps = std::round(t_snapshot / dt);
    if (std::abs(steps * dt - t_snapshot) > 1e-9 * std::max(1.0, t_snapshot)) {
        throw DomainError("snapshot time is not a grid time level");
    }
    return static_cast<Index>(steps);
}

void burgers_derivatives(const Eigen::VectorXd& u, double dx, Eigen::VectorXd& ux, Eigen::VectorXd& uxx)
{
    const Index n = u.size();
    ux.setZero(n);
    uxx.setZero(n);
    for (Index i = 0; i < n; ++i) {
        const double left = i > 0 ? u[i - 1] : 0.0;
        const double right = i + 1 < n ? u[i + 1] : 0.0;
        ux[i] = (right - left) / (2.0 * dx);
        uxx[i] = (right - 2.0 * u[i] + left) / (dx * dx);
    }
}

} // namespace

double burgers_initial(double x)
{
    return 2.0 * std::exp(-15.0 * (x - 6.0) * (x - 6.0)) + 1.5 * std::exp(-15.0 * (x + 1.0) * (x + 1.0)) +
           std::exp(-25.0 * (x + 5.0) * (x + 5.0));
}

BurgersSnapshot solve_burgers(const std::function<double(double)>& initial, const PdeGrid& grid, double t_snapshot,
                              const BurgersParams& params)
{
    grid.validate();
    if (!(params.nu > 0.0)) {
        throw DomainError("solve_burgers: viscosity must be positive for the central scheme");
    }
    const Index levels = time_levels(t_snapshot, grid.dt);
    const Index n = grid.nx;
    const double dx = grid.dx();

    Eigen::VectorXd u(n);
    for (Index i = 0; i < n; ++i) {
        u[i] = initial(grid.x(i));
    }
    const double umax = std::max(u.cwiseAbs().maxCoeff(), 1e-300);
    // Diffusion number <= 0.4 and cell Courant^2 <= 2 x diffusion number.
    const double h_max = std::min(0.4 * dx * dx / params.nu, params.nu / (params.lambda1 * params.lambda1 * umax * umax));
    const int substeps = static_cast<int>(std::ceil(grid.dt / h_max - 1e-12));
    const double h = grid.dt / substeps;

    BurgersSnapshot snap;
    snap.grid = grid;
    snap.t = t_snapshot;
    snap.substeps = substeps;

    Eigen::VectorXd ux(n);
    Eigen::VectorXd uxx(n);
    if (levels > 0) {
        u[0] = 0.0;
        u[n - 1] = 0.0;
    }
    for (Index step = 0; step < levels; ++step) {
        for (int s = 0; s < substeps; ++s) {
            burgers_derivatives(u, dx, ux, uxx);
            for (Index i = 1; i + 1 < n; ++i) {
                u[i] += h * (-params.lambda1 * u[i] * ux[i] + params.nu * uxx[i]);
            }
        }
        if (!u.allFinite() || u.cwiseAbs().maxCoeff() > 1e3 * umax) {
            throw SolverError("solve_burgers: solution blew up");
        }
    }
    burgers_derivatives(u, dx, ux, uxx);
    snap.u = u;
    snap.u_x = ux;
    snap.u_xx = uxx;
    snap.u_t = Eigen::VectorXd::Zero(n);
    for (Index i = 1; i + 1 < n; ++i) {
        snap.u_t[i] = -params.lambda1 * u[i] * ux[i] + params.nu * uxx[i];
    }
    return snap;
}

double two_source_initial(double x, double y)
{
    // Covariance [0.25 0.3; 0.3 1], determinant 0.16.
    constexpr double det = 0.16;
    constexpr double i11 = 1.0 / det;
    constexpr double i12 = -0.3 / det;
    constexpr double i22 = 0.25 / det;
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
    auto pdf = [&](double mx, double my) {
        const double a = x - mx;
        const double b = y - my;
        return norm * std::exp(-0.5 * (i11 * a * a + 2.0 * i12 * a * b + i22 * b * b));
    };
    return pdf(3.0, 5.0) + pdf(7.0, 5.0);
}

DiffusionSnapshot solve_diffusion_2d(const std::function<double(double, double)>& initial, const PdeGrid& grid,
                                     double t_snapshot, double diffusivity)
{
    grid.validate();
    if (grid.ny < 3) {
        throw DomainError("solve_diffusion_2d: grid must be two-dimensional");
    }
    if (!(diffusivity > 0.0)) {
        throw DomainError("solve_diffusion_2d: diffusivity must be positive");
    }
    const double dx = grid.dx();
    const double dy = grid.dy();
    const double limit = dx * dx * dy * dy / (2.0 * (dx * dx + dy * dy)) / diffusivity;
    if (grid.dt > limit) {
        throw DomainError("solve_diffusion_2d: time step violates the explicit stability bound");
    }
    const Index levels = time_levels(t_snapshot, grid.dt);
    const Index nx = grid.nx;
    const Index ny = grid.ny;

    DiffusionSnapshot s;
    s.grid = grid;
    s.t = t_snapshot;
    auto at = [nx](Index i, Index j) { return j * nx + i; };
    Eigen::VectorXd c(nx * ny);
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            c[at(i, j)] = initial(grid.x(i), grid.y(j));
        }
    }
    auto laplacian = [&](const Eigen::VectorXd& f, Index i, Index j) {
        return (f[at(i + 1, j)] - 2.0 * f[at(i, j)] + f[at(i - 1, j)]) / (dx * dx) +
               (f[at(i, j + 1)] - 2.0 * f[at(i, j)] + f[at(i, j - 1)]) / (dy * dy);
    };
    auto zero_boundary = [&](Eigen::VectorXd& f) {
        for (Index i = 0; i < nx; ++i) {
            f[at(i, 0)] = 0.0;
            f[at(i, ny - 1)] = 0.0;
        }
        for (Index j = 0; j < ny; ++j) {
            f[at(0, j)] = 0.0;
            f[at(nx - 1, j)] = 0.0;
        }
    };
    if (levels > 0) {
        zero_boundary(c);
    }
    Eigen::VectorXd next(c.size());
    for (Index step = 0; step < levels; ++step) {
        next.setZero();
        for (Index j = 1; j + 1 < ny; ++j) {
            for (Index i = 1; i + 1 < nx; ++i) {
                next[at(i, j)] = c[at(i, j)] + grid.dt * diffusivity * laplacian(c, i, j);
            }
        }
        c.swap(next);
    }

    const Index total = nx * ny;
    s.c = c;
    s.c_x.setZero(total);
    s.c_y.setZero(total);
    s.c_xx.setZero(total);
    s.c_yy.setZero(total);
    s.c_xy.setZero(total);
    s.c_t.setZero(total);
    auto val = [&](Index i, Index j) {
        return (i < 0 || j < 0 || i >= nx || j >= ny) ? 0.0 : c[at(i, j)];
    };
    for (Index j = 0; j < ny; ++j) {
        for (Index i = 0; i < nx; ++i) {
            const Index k = at(i, j);
            s.c_x[k] = (val(i + 1, j) - val(i - 1, j)) / (2.0 * dx);
            s.c_y[k] = (val(i, j + 1) - val(i, j - 1)) / (2.0 * dy);
            s.c_xx[k] = (val(i + 1, j) - 2.0 * val(i, j) + val(i - 1, j)) / (dx * dx);
            s.c_yy[k] = (val(i, j + 1) - 2.0 * val(i, j) + val(i, j - 1)) / (dy * dy);
            s.c_xy[k] = (val(i + 1, j + 1) - val(i + 1, j - 1) - val(i - 1, j + 1) + val(i - 1, j - 1)) /
                        (4.0 * dx * dy);
            if (i > 0 && j > 0 && i + 1 < nx && j + 1 < ny) {
                s.c_t[k] = diffusivity * laplacian(c, i, j);
            }
        }
    }
    return s;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v)
{
    char b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    }
    os.write(b, 8);
}

std::uint64_t get_u64(std::istream& is)
{
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) {
        throw std::runtime_error("read_snapshot: truncated file");
    }
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) {
        v = (v << 8) | b[i];
    }
    return v;
}

void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

} // namespace

// Layout (little-endian): int64 nx, int64 ny, f64 x_lo, f64 y_lo, f64 dx, f64 dy,
// f64 dt, f64 t, then the fields c, c_x, c_y, c_xx, c_yy, c_xy, c_t, each nx*ny
// f64 values in row-major (y-major) order.
void write_snapshot(std::ostream& os, const DiffusionSnapshot& s)
{
    put_u64(os, static_cast<std::uint64_t>(s.grid.nx));
    put_u64(os, static_cast<std::uint64_t>(s.grid.ny));
    put_f64(os, s.grid.x_lo);
    put_f64(os, s.grid.y_lo);
    put_f64(os, s.grid.dx());
    put_f64(os, s.grid.dy());
    put_f64(os, s.grid.dt);
    put_f64(os, s.t);
    for (const Eigen::VectorXd* f : {&s.c, &s.c_x, &s.c_y, &s.c_xx, &s.c_yy, &s.c_xy, &s.c_t}) {
        for (Index k = 0; k < f->size(); ++k) {
            put_f64(os, (*f)[k]);
        }
    }
}

DiffusionSnapshot read_snapshot(std::istream& is)
{
    DiffusionSnapshot s;
    s.grid.nx = static_cast<Index>(get_u64(is));
    s.grid.ny = static_cast<Index>(get_u64(is));
    if (s.grid.nx < 3 || s.grid.ny < 3 || s.grid.nx > (1 << 20) || s.grid.ny > (1 << 20)) {
        throw std::runtime_error("read_snapshot: implausible grid size");
    }
    s.grid.x_lo = get_f64(is);
    s.grid.y_lo = get_f64(is);
    const double dx = get_f64(is);
    const double dy = get_f64(is);
    s.grid.x_hi = s.grid.x_lo + dx * static_cast<double>(s.grid.nx - 1);
    s.grid.y_hi = s.grid.y_lo + dy * static_cast<double>(s.grid.ny - 1);
    s.grid.dt = get_f64(is);
    s.t = get_f64(is);
    const Index total = s.grid.nx * s.grid.ny;
    for (Eigen::VectorXd* f : {&s.c, &s.c_x, &s.c_y, &s.c_xx, &s.c_yy, &s.c_xy, &s.c_t}) {
        f->resize(total);
        for (Index k = 0; k < total; ++k) {
            (*f)[k] = get_f64(is);
        }
    }
    return s;
}

std::vector<Observation> add_noise(std::vector<Observation> obs, double sigma2, NoiseTarget target,
                                   std::mt19937_64& rng)
{
    if (!(sigma2 >= 0.0)) {
        throw DomainError("add_noise: sigma2 must be nonnegative");
    }
    if (sigma2 == 0.0) {
        return obs;
    }
    std::normal_distribution<double> noise(0.0, std::sqrt(sigma2));
    for (auto& o : obs) {
        Eigen::VectorXd& v = target == NoiseTarget::STATE ? o.state : o.time_derivative;
        for (Index r = 0; r < v.size(); ++r) {
            v[r] += noise(rng);
        }
    }
    return obs;
}

TabulatedOracle::TabulatedOracle(std::vector<Observation> table, double sigma2, NoiseTarget target,
                                 std::uint64_t seed)
    : table_(std::move(table)), order_(table_.size()), sigma2_(sigma2), target_(target), rng_(seed)
{
    if (!(sigma2 >= 0.0)) {
        throw DomainError("TabulatedOracle: sigma2 must be nonnegative");
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::sort(order_.begin(), order_.end(),
              [&](std::size_t a, std::size_t b) { return table_[a].point < table_[b].point; });
}

const Observation& TabulatedOracle::noiseless(const DesignPoint& x) const
{
    const auto it = std::lower_bound(order_.begin(), order_.end(), x,
                                     [&](std::size_t a, const DesignPoint& p) { return table_[a].point < p; });
    if (it == order_.end() || !(table_[*it].point == x)) {
        throw OracleError("TabulatedOracle: point not in table");
    }
    return table_[*it];
}

std::vector<Observation> TabulatedOracle::query(std::span<const DesignPoint> points)
{
    std::vector<Observation> out;
    out.reserve(points.size());
    for (const auto& x : points) {
        out.push_back(noiseless(x));
    }
    return add_noise(std::move(out), sigma2_, target_, rng_);
}

std::string to_string(StudyKind k)
{
    switch (k) {
    case StudyKind::ODE_LINEAR:
        return "ODE_LINEAR";
    case StudyKind::ODE_RANDOM:
        return "ODE_RANDOM";
    case StudyKind::BASS:
        return "BASS";
    case StudyKind::BURGERS:
        return "BURGERS";
    case StudyKind::DIFFUSION_2D:
        return "DIFFUSION_2D";
    }
    return "?";
}

StudyKind parse_study(const std::string& s)
{
    std::string u = s;
    for (auto& ch : u) {
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    for (StudyKind k : {StudyKind::ODE_LINEAR, StudyKind::ODE_RANDOM, StudyKind::BASS, StudyKind::BURGERS,
                        StudyKind::DIFFUSION_2D}) {
        if (u == to_string(k)) {
            return k;
        }
    }
    if (u == "DIFFUSION") {
        return StudyKind::DIFFUSION_2D;
    }
    throw std::invalid_argument("unknown study '" + s + "'");
}

basis::BasisLibrary diffusion_library()
{
    const basis::BasisLibrary full = basis::build_library(2, 1, 2, 2, false);
    std::vector<std::vector<int>> factors;
    for (const auto& t : full.terms()) {
        if (!t.is_constant()) {
            factors.push_back(t.factors);
        }
    }
    return basis::BasisLibrary(2, 1, full.atoms(), std::move(factors));
}

namespace {

constexpr int kOdeDegree = 5;
constexpr Index kTimePool = 3000;
constexpr double kHorizon = 30.0;

std::vector<double> time_grid()
{
    std::vector<double> t(static_cast<std::size_t>(kTimePool));
    for (Index i = 0; i < kTimePool; ++i) {
        t[static_cast<std::size_t>(i)] = kHorizon * static_cast<double>(i) / static_cast<double>(kTimePool - 1);
    }
    return t;
}

CandidatePool time_pool(const std::vector<double>& t)
{
    std::vector<DesignPoint> pts;
    pts.reserve(t.size());
    for (double v : t) {
        pts.push_back(DesignPoint::scalar(v));
    }
    return CandidatePool(std::move(pts));
}

Study ode_study(StudyKind kind, const OdeSpec& spec)
{
    Study s{kind, basis::build_monomial_library(2, kOdeDegree), {}, {}, {}, NoiseTarget::TIME_DERIVATIVE, {}, {}};
    const std::vector<double> t = time_grid();
    s.pool = time_pool(t);
    s.table = solve_linear_ode(spec, t);
    s.truth = spec.truth(kOdeDegree);
    s.defaults.tol = 1e-2;
    s.defaults.n_init = 16;
    s.defaults.batch_size = 16;
    s.defaults.n_max = 480;
    return s;
}

PdeGrid burgers_grid()
{
    PdeGrid g;
    g.x_lo = 0.0;
    g.x_hi = 10.0;
    g.nx = 4001;
    g.dt = 1e-3;
    return g;
}

const BurgersSnapshot& burgers_reference()
{
    static const BurgersSnapshot snap = solve_burgers(burgers_initial, burgers_grid(), 0.1);
    return snap;
}

// 32 x 32 pool nodes sit on every 10th node of a 311 x 311 solver grid.
constexpr Index kDiffusionPool = 32;
constexpr Index kDiffusionRefine = 10;

PdeGrid diffusion_grid()
{
    PdeGrid g;
    g.x_lo = 0.0;
    g.x_hi = 10.0;
    g.y_lo = 0.0;
    g.y_hi = 10.0;
    g.nx = (kDiffusionPool - 1) * kDiffusionRefine + 1;
    g.ny = g.nx;
    g.dt = 5e-5;
    return g;
}

const DiffusionSnapshot& diffusion_reference()
{
    static const DiffusionSnapshot snap = solve_diffusion_2d(two_source_initial, diffusion_grid(), 5e-4);
    return snap;
}

} // namespace

Study make_study(StudyKind kind, std::uint64_t problem_seed)
{
    switch (kind) {
    case StudyKind::ODE_LINEAR: {
        Study s = ode_study(kind, rotation_system(0.5, 2.0));
        s.default_sigma2 = {0.04, 0.25, 0.64};
        return s;
    }
    case StudyKind::ODE_RANDOM: {
        std::mt19937_64 rng(problem_seed);
        Study s = ode_study(kind, sample_random_coeff_system(rng));
        s.defaults.fixed_n = 112;
        s.default_sigma2 = {0.16, 0.36, 0.64};
        return s;
    }
    case StudyKind::BASS: {
        std::mt19937_64 rng(problem_seed);
        std::uniform_real_distribution<double> up(0.0, 0.03);
        std::uniform_real_distribution<double> uq(0.3, 0.5);
        double p = 0.0;
        while (!(p > 0.0)) {
            p = up(rng);
        }
        const double q = uq(rng);
        Study s{kind, basis::build_monomial_library(1, kOdeDegree), {}, {}, {}, NoiseTarget::STATE, {}, {}};
        const std::vector<double> t = time_grid();
        s.pool = time_pool(t);
        for (double tv : t) {
            const auto [f, df] = bass_solution(p, q, tv);
            Observation o;
            o.point = DesignPoint::scalar(tv);
            o.state = Eigen::VectorXd::Constant(1, f);
            o.time_derivative = Eigen::VectorXd::Constant(1, df);
            s.table.push_back(std::move(o));
        }
        // dF/dt = p + (q - p) F - q F^2.
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(s.library.size());
        beta[0] = p;
        beta[1] = q - p;
        beta[2] = -q;
        s.truth.push_back(EstimatedEquation::from_coefficients(beta));
        s.defaults.tol = 1e-2;
        s.defaults.n_init = 16;
        s.defaults.batch_size = 16;
        s.defaults.n_max = 480;
        s.default_sigma2 = {1e-4, 4e-4, 16e-4};
        return s;
    }
    case StudyKind::BURGERS: {
        const BurgersSnapshot& snap = burgers_reference();
        Study s{kind, basis::burgers_library(), {}, {}, {}, NoiseTarget::TIME_DERIVATIVE, {}, {}};
        std::vector<DesignPoint> pts;
        for (Index i = 1; i + 1 < snap.grid.nx; ++i) {
            Observation o;
            o.point = DesignPoint::scalar(snap.grid.x(i));
            o.state = Eigen::VectorXd::Constant(1, snap.u[i]);
            o.time_derivative = Eigen::VectorXd::Constant(1, snap.u_t[i]);
            o.spatial_derivatives[{1}] = Eigen::VectorXd::Constant(1, snap.u_x[i]);
            o.spatial_derivatives[{2}] = Eigen::VectorXd::Constant(1, snap.u_xx[i]);
            pts.push_back(o.point);
            s.table.push_back(std::move(o));
        }
        s.pool = CandidatePool(std::move(pts));
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(s.library.size());
        beta[s.library.index_of("u*u_x1")] = -1.0;
        beta[s.library.index_of("u_x1x1")] = 0.01;
        s.truth.push_back(EstimatedEquation::from_coefficients(beta));
        s.defaults.tol = 1e-2;
        s.defaults.n_init = 5;
        s.defaults.batch_size = 10;
        s.defaults.n_max = 400;
        s.default_sigma2 = {0.04, 0.16, 0.64};
        return s;
    }
    case StudyKind::DIFFUSION_2D: {
        const DiffusionSnapshot& snap = diffusion_reference();
        Study s{kind, diffusion_library(), {}, {}, {}, NoiseTarget::TIME_DERIVATIVE, {}, {}};
        std::vector<DesignPoint> pts;
        for (Index b = 0; b < kDiffusionPool; ++b) {
            for (Index a = 0; a < kDiffusionPool; ++a) {
                const Index i = a * kDiffusionRefine;
                const Index j = b * kDiffusionRefine;
                const Index k = snap.index(i, j);
                Observation o;
                o.point = DesignPoint{10.0 * static_cast<double>(a) / 31.0, 10.0 * static_cast<double>(b) / 31.0};
                o.state = Eigen::VectorXd::Constant(1, snap.c[k]);
                o.time_derivative = Eigen::VectorXd::Constant(1, snap.c_t[k]);
                o.spatial_derivatives[{1, 0}] = Eigen::VectorXd::Constant(1, snap.c_x[k]);
                o.spatial_derivatives[{0, 1}] = Eigen::VectorXd::Constant(1, snap.c_y[k]);
                o.spatial_derivatives[{2, 0}] = Eigen::VectorXd::Constant(1, snap.c_xx[k]);
                o.spatial_derivatives[{0, 2}] = Eigen::VectorXd::Constant(1, snap.c_yy[k]);
                o.spatial_derivatives[{1, 1}] = Eigen::VectorXd::Constant(1, snap.c_xy[k]);
                pts.push_back(o.point);
                s.table.push_back(std::move(o));
            }
        }
        s.pool = CandidatePool(std::move(pts));
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(s.library.size());
        beta[s.library.index_of("u_x1x1")] = 1.0;
        beta[s.library.index_of("u_x2x2")] = 1.0;
        s.truth.push_back(EstimatedEquation::from_coefficients(beta));
        s.defaults.tol = 1e-2;
        s.defaults.n_init = 16;
        s.defaults.batch_size = 16;
        s.defaults.n_max = 80;
        s.defaults.fixed_n = 80;
        s.defaults.initial_design = activelearn::InitialDesign::Stratified;
        s.default_sigma2 = {0.04, 0.16, 0.64};
        return s;
    }
    }
    throw std::invalid_argument("make_study: unknown study");
}

} // namespace acds::sim
