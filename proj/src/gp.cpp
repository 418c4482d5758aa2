#include "acds/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace acds::gp {

namespace {

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-4;
constexpr double kBadObjective = 1e100;

// Factorizes base + jitter*scale*I, escalating the jitter from 1e-8 to 1e-4
// (relative to scale) until the factorization succeeds.
bool factorize_with_jitter(const Eigen::MatrixXd& base, double scale, Eigen::LLT<Eigen::MatrixXd>& llt,
                           double& jitter)
{
    llt.compute(base);
    jitter = 0.0;
    if (llt.info() == Eigen::Success) {
        return true;
    }
    for (double rel = kJitterStart; rel <= kJitterMax * (1.0 + 1e-12); rel *= 2.0) {
        Eigen::MatrixXd m = base;
        m.diagonal().array() += rel * scale;
        llt.compute(m);
        if (llt.info() == Eigen::Success) {
            jitter = rel * scale;
            return true;
        }
    }
    return false;
}

void check_inputs(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs)
{
    if (inputs.rows() != outputs.size()) {
        throw DimensionError("gp: inputs and outputs have different lengths");
    }
    if (inputs.cols() < 1) {
        throw DimensionError("gp: input dimension must be >= 1");
    }
    if (!inputs.allFinite() || !outputs.allFinite()) {
        throw DomainError("gp: non-finite training data");
    }
}

void check_distinct(const Eigen::MatrixXd& inputs)
{
    std::vector<Index> order(static_cast<std::size_t>(inputs.rows()));
    for (Index i = 0; i < inputs.rows(); ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    auto less = [&](Index a, Index b) {
        for (Index s = 0; s < inputs.cols(); ++s) {
            if (inputs(a, s) != inputs(b, s)) {
                return inputs(a, s) < inputs(b, s);
            }
        }
        return false;
    };
    std::sort(order.begin(), order.end(), less);
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (!less(order[i - 1], order[i])) {
            throw ConditioningError("gp: duplicate training inputs");
        }
    }
}

// Concentrated likelihood in the standardized scale: inputs in [0,1]^p,
// outputs with zero mean and unit variance, tau^2 and mu profiled out.
struct ConcentratedProblem {
    std::vector<Eigen::MatrixXd> sqdiff;
    Eigen::VectorXd y;
    Index n = 0;
    Index p = 0;
    bool nugget = true;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    int evaluations = 0;
};

struct ConcentratedValue {
    bool ok = false;
    double neg2ll = kBadObjective;
    double mu = 0.0;
    double tau2 = 1.0;
};

double log_nugget(const ConcentratedProblem& prob, const Eigen::VectorXd& z)
{
    return prob.nugget ? z[prob.p] : -std::numeric_limits<double>::infinity();
}

ConcentratedValue concentrated(ConcentratedProblem& prob, const Eigen::VectorXd& z)
{
    ++prob.evaluations;
    Eigen::MatrixXd expo = Eigen::MatrixXd::Zero(prob.n, prob.n);
    for (Index s = 0; s < prob.p; ++s) {
        expo.noalias() -= (0.5 * std::exp(-z[s])) * prob.sqdiff[static_cast<std::size_t>(s)];
    }
    Eigen::MatrixXd r = expo.array().exp().matrix();
    r.diagonal().array() += std::exp(log_nugget(prob, z));

    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
    ConcentratedValue out;
    if (!factorize_with_jitter(r, 1.0, llt, jitter)) {
        return out;
    }
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(prob.n);
    const Eigen::VectorXd rinv_y = llt.solve(prob.y);
    const Eigen::VectorXd rinv_1 = llt.solve(ones);
    const double denom = ones.dot(rinv_1);
    if (!(denom > 0.0)) {
        return out;
    }
    out.mu = ones.dot(rinv_y) / denom;
    const Eigen::VectorXd resid = prob.y - out.mu * ones;
    const double q = resid.dot(llt.solve(resid));
    if (!(q > 0.0) || !std::isfinite(q)) {
        return out;
    }
    const Eigen::MatrixXd& l = llt.matrixLLT();
    const double logdet = 2.0 * l.diagonal().array().log().sum();
    out.tau2 = q / static_cast<double>(prob.n);
    out.neg2ll = static_cast<double>(prob.n) * std::log(out.tau2) + logdet;
    out.ok = std::isfinite(out.neg2ll);
    if (!out.ok) {
        out.neg2ll = kBadObjective;
    }
    return out;
}

double concentrated_loglik(const ConcentratedProblem& prob, double neg2ll)
{
    const double n = static_cast<double>(prob.n);
    return -0.5 * (neg2ll + n + n * std::log(2.0 * std::numbers::pi));
}

double nm_objective(const gsl_vector* x, void* params)
{
    auto& prob = *static_cast<ConcentratedProblem*>(params);
    const Index dim = prob.lower.size();
    Eigen::VectorXd z(dim);
    double penalty = 0.0;
    for (Index i = 0; i < dim; ++i) {
        const double v = gsl_vector_get(x, static_cast<std::size_t>(i));
        z[i] = std::clamp(v, prob.lower[i], prob.upper[i]);
        penalty += (v - z[i]) * (v - z[i]);
    }
    return concentrated(prob, z).neg2ll + 1e3 * penalty;
}

Eigen::VectorXd nelder_mead(ConcentratedProblem& prob, const Eigen::VectorXd& start, const FitConfig& cfg)
{
    const auto dim = static_cast<std::size_t>(start.size());
    gsl_multimin_function fn;
    fn.n = dim;
    fn.f = &nm_objective;
    fn.params = &prob;

    gsl_vector* x = gsl_vector_alloc(dim);
    gsl_vector* step = gsl_vector_alloc(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        gsl_vector_set(x, i, start[static_cast<Index>(i)]);
        gsl_vector_set(step, i, 1.0);
    }
    gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    gsl_multimin_fminimizer_set(nm, &fn, x, step);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) {
            break;
        }
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), cfg.simplex_size_tol) == GSL_SUCCESS) {
            break;
        }
    }
    Eigen::VectorXd best(static_cast<Index>(dim));
    const gsl_vector* xb = gsl_multimin_fminimizer_x(nm);
    for (std::size_t i = 0; i < dim; ++i) {
        const auto ii = static_cast<Index>(i);
        best[ii] = std::clamp(gsl_vector_get(xb, i), prob.lower[ii], prob.upper[ii]);
    }
    gsl_multimin_fminimizer_free(nm);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return best;
}

struct GslErrorsOff {
    GslErrorsOff() : previous(gsl_set_error_handler_off()) {}
    ~GslErrorsOff() { gsl_set_error_handler(previous); }
    GslErrorsOff(const GslErrorsOff&) = delete;
    GslErrorsOff& operator=(const GslErrorsOff&) = delete;
    gsl_error_handler_t* previous;
};

} // namespace

void GpHyperparams::validate() const
{
    if (!(tau2 > 0.0) || !std::isfinite(tau2)) {
        throw DomainError("GpHyperparams: tau2 must be positive");
    }
    if (!(sigma0_2 >= 0.0) || !std::isfinite(sigma0_2)) {
        throw DomainError("GpHyperparams: sigma0_2 must be nonnegative");
    }
    if (omega.size() < 1) {
        throw DimensionError("GpHyperparams: omega is empty");
    }
    if (!(omega.array() > 0.0).all() || !omega.allFinite()) {
        throw DomainError("GpHyperparams: omega must be positive");
    }
    if (!std::isfinite(mu)) {
        throw DomainError("GpHyperparams: mu must be finite");
    }
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const GpHyperparams& h)
{
    if (a.size() != h.omega.size() || b.size() != h.omega.size()) {
        throw DimensionError("gp::kernel: dimension mismatch");
    }
    double acc = 0.0;
    for (Index s = 0; s < a.size(); ++s) {
        const double d = a[s] - b[s];
        acc += d * d / (2.0 * h.omega[s]);
    }
    return h.tau2 * std::exp(-acc);
}

double kernel(const DesignPoint& a, const DesignPoint& b, const GpHyperparams& h)
{
    return kernel(a.coords(), b.coords(), h);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& inputs, const GpHyperparams& h)
{
    if (inputs.cols() != h.omega.size()) {
        throw DimensionError("gp::kernel_matrix: dimension mismatch");
    }
    const Index n = inputs.rows();
    Eigen::MatrixXd k(n, n);
    for (Index j = 0; j < n; ++j) {
        k(j, j) = h.tau2;
        for (Index i = j + 1; i < n; ++i) {
            const double v = kernel(inputs.row(i).transpose(), inputs.row(j).transpose(), h);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Eigen::MatrixXd to_matrix(std::span<const DesignPoint> points)
{
    if (points.empty()) {
        return {};
    }
    const Index p = points.front().dim();
    Eigen::MatrixXd m(static_cast<Index>(points.size()), p);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].dim() != p) {
            throw DimensionError("gp::to_matrix: inconsistent point dimensions");
        }
        m.row(static_cast<Index>(i)) = points[i].coords().transpose();
    }
    return m;
}

GpModel GpModel::condition(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                           GpHyperparams hyperparams, bool profile_mean)
{
    check_inputs(inputs, outputs);
    hyperparams.validate();
    if (hyperparams.dim() != inputs.cols()) {
        throw DimensionError("GpModel::condition: hyperparameter dimension mismatch");
    }
    GpModel m;
    m.inputs_ = inputs;
    m.outputs_ = outputs;

    Eigen::MatrixXd k = gp::kernel_matrix(inputs, hyperparams);
    k.diagonal().array() += hyperparams.sigma0_2;
    if (!factorize_with_jitter(k, hyperparams.tau2, m.llt_, m.jitter_)) {
        throw ConditioningError("GpModel::condition: covariance matrix not positive definite");
    }
    k.diagonal().array() += m.jitter_;

    const Index n = inputs.rows();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    if (profile_mean) {
        const Eigen::VectorXd kinv_1 = m.llt_.solve(ones);
        hyperparams.mu = kinv_1.dot(outputs) / kinv_1.sum();
    }
    const Eigen::VectorXd rhs = outputs - hyperparams.mu * ones;
    Eigen::VectorXd sol = m.llt_.solve(rhs);
    const Eigen::VectorXd resid = rhs - k * sol;
    sol += m.llt_.solve(resid);
    m.solve_ = std::move(sol);
    m.hyperparams_ = std::move(hyperparams);
    return m;
}

Eigen::MatrixXd GpModel::kernel_matrix() const
{
    Eigen::MatrixXd k = gp::kernel_matrix(inputs_, hyperparams_);
    k.diagonal().array() += hyperparams_.sigma0_2 + jitter_;
    return k;
}

Eigen::MatrixXd GpModel::kernel_inverse() const
{
    return llt_.solve(Eigen::MatrixXd::Identity(size(), size()));
}

Eigen::VectorXd GpModel::kernel_inverse_diagonal() const
{
    // K^-1 = L^-T L^-1, so diag(K^-1)_i is the squared norm of column i of L^-1.
    Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(size(), size());
    llt_.matrixL().solveInPlace(linv);
    return linv.colwise().squaredNorm().transpose();
}

GpModel fit(std::span<const DesignPoint> inputs, const Eigen::VectorXd& outputs, const FitConfig& config)
{
    return fit(to_matrix(inputs), outputs, config);
}

GpModel fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs, const FitConfig& config)
{
    check_inputs(inputs, outputs);
    const Index n = inputs.rows();
    const Index p = inputs.cols();
    if (n < 3) {
        throw DimensionError("gp::fit: need at least 3 training points");
    }
    if (config.n_starts < 1) {
        throw std::invalid_argument("gp::fit: n_starts must be >= 1");
    }
    check_distinct(inputs);

    const Eigen::RowVectorXd lo = inputs.colwise().minCoeff();
    Eigen::RowVectorXd range = inputs.colwise().maxCoeff() - lo;
    for (Index s = 0; s < p; ++s) {
        if (!(range[s] > 0.0)) {
            range[s] = 1.0;
        }
    }
    const double ymean = outputs.mean();
    const double ysd = std::sqrt((outputs.array() - ymean).square().mean());

    if (!(ysd > 0.0)) {
        GpHyperparams h;
        h.mu = outputs[0];
        h.tau2 = 1.0;
        h.omega = (0.01 * range.array().square()).transpose();
        h.sigma0_2 = 0.0;
        GpModel m = GpModel::condition(inputs, outputs, h, false);
        FitDiagnostics d;
        d.start_loglik.assign(static_cast<std::size_t>(config.n_starts), 0.0);
        d.final_loglik = d.start_loglik;
        m.set_diagnostics(std::move(d));
        return m;
    }

    ConcentratedProblem prob;
    prob.n = n;
    prob.p = p;
    prob.nugget = config.estimate_nugget;
    prob.y = (outputs.array() - ymean) / ysd;
    const Eigen::MatrixXd scaled = (inputs.rowwise() - lo).array().rowwise() / range.array();
    prob.sqdiff.resize(static_cast<std::size_t>(p));
    for (Index s = 0; s < p; ++s) {
        const Eigen::VectorXd col = scaled.col(s);
        prob.sqdiff[static_cast<std::size_t>(s)] =
            (col.replicate(1, n) - col.transpose().replicate(n, 1)).array().square().matrix();
    }

    const Index dim = p + (prob.nugget ? 1 : 0);
    prob.lower.resize(dim);
    prob.upper.resize(dim);
    prob.lower.head(p).setConstant(std::log(config.omega_lower_factor));
    prob.upper.head(p).setConstant(std::log(config.omega_upper_factor));
    if (prob.nugget) {
        prob.lower[p] = std::log(config.nugget_ratio_min);
        prob.upper[p] = std::log(config.nugget_ratio_max);
    }

    std::vector<Eigen::VectorXd> starts;
    if (config.warm_start && config.warm_start->dim() == p) {
        const auto& w = *config.warm_start;
        Eigen::VectorXd z(dim);
        for (Index s = 0; s < p; ++s) {
            z[s] = std::log(w.omega[s] / (range[s] * range[s]));
        }
        if (prob.nugget) {
            z[p] = std::log(std::max(w.sigma0_2 / w.tau2, config.nugget_ratio_min));
        }
        starts.push_back(z.cwiseMax(prob.lower).cwiseMin(prob.upper));
    } else {
        Eigen::VectorXd z(dim);
        z.head(p).setConstant(std::log(0.05));
        if (prob.nugget) {
            z[p] = std::log(1e-4);
        }
        starts.push_back(z.cwiseMax(prob.lower).cwiseMin(prob.upper));
    }
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double omega_lo = prob.lower[0];
    const double omega_hi = std::min(prob.upper[0], 0.0);
    while (static_cast<int>(starts.size()) < config.n_starts) {
        Eigen::VectorXd z(dim);
        for (Index s = 0; s < p; ++s) {
            z[s] = omega_lo + (omega_hi - omega_lo) * u01(rng);
        }
        if (prob.nugget) {
            const double glo = std::max(prob.lower[p], std::log(1e-6));
            const double ghi = std::min(prob.upper[p], std::log(1e-1));
            z[p] = glo + (ghi - glo) * u01(rng);
        }
        starts.push_back(z);
    }

    GslErrorsOff guard;
    FitDiagnostics diag;
    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_z;
    for (const auto& z0 : starts) {
        const ConcentratedValue v0 = concentrated(prob, z0);
        diag.start_loglik.push_back(concentrated_loglik(prob, v0.neg2ll));
        Eigen::VectorXd z = nelder_mead(prob, z0, config);
        ConcentratedValue v = concentrated(prob, z);
        if (v.neg2ll > v0.neg2ll) {
            z = z0;
            v = v0;
        }
        diag.final_loglik.push_back(concentrated_loglik(prob, v.neg2ll));
        if (v.ok && v.neg2ll < best_val) {
            best_val = v.neg2ll;
            best_z = z;
        }
    }
    if (best_z.size() == 0) {
        throw FitError("gp::fit: likelihood not finite at any start");
    }
    diag.best_loglik = concentrated_loglik(prob, best_val);
    diag.objective_evaluations = prob.evaluations;

    const ConcentratedValue best = concentrated(prob, best_z);
    GpHyperparams h;
    h.tau2 = best.tau2 * ysd * ysd;
    h.omega.resize(p);
    for (Index s = 0; s < p; ++s) {
        h.omega[s] = std::exp(best_z[s]) * range[s] * range[s];
    }
    h.sigma0_2 = prob.nugget ? std::exp(best_z[p]) * h.tau2 : 0.0;
    h.mu = ymean + ysd * best.mu;
    GpModel m = GpModel::condition(inputs, outputs, h, true);
    m.set_diagnostics(std::move(diag));
    return m;
}

double log_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs, const GpHyperparams& h)
{
    const GpModel m = GpModel::condition(inputs, outputs, h, false);
    const Eigen::VectorXd resid = outputs - h.mu * Eigen::VectorXd::Ones(outputs.size());
    const double quad = resid.dot(m.solve_vector());
    const double logdet = 2.0 * m.factorization().matrixLLT().diagonal().array().log().sum();
    const double n = static_cast<double>(outputs.size());
    return -0.5 * (quad + logdet + n * std::log(2.0 * std::numbers::pi));
}

SurrogateValues evaluate(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& query)
{
    const auto& h = model.hyperparams();
    const Index p = model.dim();
    if (query.size() != p) {
        throw DimensionError("gp::evaluate: query dimension mismatch");
    }
    SurrogateValues out;
    out.value = h.mu;
    out.gradient = Eigen::VectorXd::Zero(p);
    out.hessian = Eigen::MatrixXd::Zero(p, p);
    const Eigen::ArrayXd inv_omega = h.omega.array().inverse();
    const auto& x = model.train_inputs();
    const auto& v = model.solve_vector();
    Eigen::ArrayXd scaled(p);
    for (Index i = 0; i < model.size(); ++i) {
        double acc = 0.0;
        for (Index s = 0; s < p; ++s) {
            const double d = query[s] - x(i, s);
            scaled[s] = d * inv_omega[s];
            acc += d * scaled[s];
        }
        const double w = h.tau2 * std::exp(-0.5 * acc) * v[i];
        out.value += w;
        out.gradient.array() -= scaled * w;
        for (Index j = 0; j < p; ++j) {
            for (Index l = 0; l <= j; ++l) {
                out.hessian(l, j) += scaled[j] * scaled[l] * w;
            }
            out.hessian(j, j) -= inv_omega[j] * w;
        }
    }
    for (Index j = 0; j < p; ++j) {
        for (Index l = j + 1; l < p; ++l) {
            out.hessian(l, j) = out.hessian(j, l);
        }
    }
    return out;
}

double predict(const GpModel& model, const DesignPoint& query)
{
    const auto& h = model.hyperparams();
    if (query.dim() != model.dim()) {
        throw DimensionError("gp::predict: query dimension mismatch");
    }
    const auto& x = model.train_inputs();
    const auto& v = model.solve_vector();
    double out = h.mu;
    for (Index i = 0; i < model.size(); ++i) {
        out += kernel(query.coords(), x.row(i).transpose(), h) * v[i];
    }
    return out;
}

double predict_deriv1(const GpModel& model, const DesignPoint& query, Index j)
{
    if (query.dim() != model.dim()) {
        throw DimensionError("gp::predict_deriv1: query dimension mismatch");
    }
    if (j < 0 || j >= model.dim()) {
        throw std::out_of_range("gp::predict_deriv1: dimension index out of range");
    }
    const auto& h = model.hyperparams();
    const auto& x = model.train_inputs();
    const auto& v = model.solve_vector();
    double out = 0.0;
    for (Index i = 0; i < model.size(); ++i) {
        const double k = kernel(query.coords(), x.row(i).transpose(), h);
        out += -((query[j] - x(i, j)) / h.omega[j]) * k * v[i];
    }
    return out;
}

double predict_deriv2(const GpModel& model, const DesignPoint& query, Index l, Index j)
{
    if (query.dim() != model.dim()) {
        throw DimensionError("gp::predict_deriv2: query dimension mismatch");
    }
    if (j < 0 || j >= model.dim() || l < 0 || l >= model.dim()) {
        throw std::out_of_range("gp::predict_deriv2: dimension index out of range");
    }
    const auto& h = model.hyperparams();
    const auto& x = model.train_inputs();
    const auto& v = model.solve_vector();
    double out = 0.0;
    for (Index i = 0; i < model.size(); ++i) {
        const double k = kernel(query.coords(), x.row(i).transpose(), h);
        const double dj = (query[j] - x(i, j)) / h.omega[j];
        const double dl = (query[l] - x(i, l)) / h.omega[l];
        const double delta = (l == j) ? 1.0 / h.omega[j] : 0.0;
        out += (dj * dl - delta) * k * v[i];
    }
    return out;
}

Eigen::VectorXd loo_residuals(const GpModel& model)
{
    if (model.size() < 3) {
        throw DimensionError("gp::loo_residuals: need at least 3 training points");
    }
    const Eigen::VectorXd diag = model.kernel_inverse_diagonal();
    if (!(diag.array() > 0.0).all()) {
        throw ConditioningError("gp::loo_residuals: zero diagonal in inverse covariance");
    }
    return model.solve_vector().cwiseQuotient(diag);
}

double loo_cv_error(const GpModel& model)
{
    return loo_residuals(model).squaredNorm() / static_cast<double>(model.size());
}

} // namespace acds::gp
