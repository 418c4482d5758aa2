#include "acds/activelearn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "acds/design.hpp"
#include "acds/gp.hpp"
#include "acds/seed.hpp"
#include "acds/varsel.hpp"

namespace acds::activelearn {

namespace {

constexpr double kRhoFloor = 1e-10;

std::string upper(std::string s)
{
    for (auto& c : s) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return s;
}

double sample_variance(const Eigen::VectorXd& v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

Eigen::VectorXd response_column(std::span<const Observation> obs, Index r)
{
    Eigen::VectorXd y(static_cast<Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        y[static_cast<Index>(i)] = obs[i].time_derivative[r];
    }
    return y;
}

Eigen::VectorXd state_column(std::span<const Observation> obs, Index r)
{
    Eigen::VectorXd y(static_cast<Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        y[static_cast<Index>(i)] = obs[i].state[r];
    }
    return y;
}

std::vector<Observation> collect(DataOracle& oracle, std::span<const DesignPoint> points)
{
    std::vector<Observation> got = oracle.query(points);
    if (got.size() != points.size()) {
        throw OracleError("oracle returned " + std::to_string(got.size()) + " observations for " +
                          std::to_string(points.size()) + " points");
    }
    for (auto& o : got) {
        o.validate();
    }
    return got;
}

std::vector<gp::GpModel> fit_surrogates(const Eigen::MatrixXd& inputs, std::span<const Observation> obs, Index d,
                                        const RunConfig& config, std::uint64_t seed,
                                        std::vector<std::optional<gp::GpHyperparams>>& warm)
{
    std::vector<gp::GpModel> models;
    models.reserve(static_cast<std::size_t>(d));
    for (Index r = 0; r < d; ++r) {
        const Eigen::VectorXd y = state_column(obs, r);
        auto& ws = warm[static_cast<std::size_t>(r)];
        gp::FitConfig fc;
        fc.seed = derive_seed(seed, {static_cast<std::uint64_t>(r)});
        fc.warm_start = ws;
        fc.n_starts = ws ? config.gp_starts_warm : config.gp_starts;
        try {
            models.push_back(gp::fit(inputs, y, fc));
        } catch (const std::exception&) {
            // One retry from a fresh multistart; a second failure aborts the run.
            fc.warm_start.reset();
            fc.n_starts = config.gp_starts;
            fc.seed = derive_seed(fc.seed, {0xFEEDULL});
            models.push_back(gp::fit(inputs, y, fc));
        }
        ws = models.back().hyperparams();
    }
    return models;
}

} // namespace

std::string to_string(Criterion c)
{
    switch (c) {
    case Criterion::ACDS:
        return "ACDS";
    case Criterion::D_OPTIMAL_ONLY:
        return "D_OPTIMAL_ONLY";
    case Criterion::MAXIMIN_ONLY:
        return "MAXIMIN_ONLY";
    }
    return "?";
}

std::string to_string(ConvergenceReason r)
{
    switch (r) {
    case ConvergenceReason::TOL_REACHED:
        return "TOL_REACHED";
    case ConvergenceReason::N_MAX:
        return "N_MAX";
    case ConvergenceReason::FIXED_N:
        return "FIXED_N";
    }
    return "?";
}

Criterion parse_criterion(const std::string& s)
{
    const std::string u = upper(s);
    if (u == "ACDS") {
        return Criterion::ACDS;
    }
    if (u == "D_OPTIMAL_ONLY" || u == "DOPT" || u == "D_OPTIMAL") {
        return Criterion::D_OPTIMAL_ONLY;
    }
    if (u == "MAXIMIN_ONLY" || u == "MAXIMIN") {
        return Criterion::MAXIMIN_ONLY;
    }
    throw std::invalid_argument("unknown criterion '" + s + "'");
}

void RunConfig::validate() const
{
    if (n_init < 1 || batch_size < 1) {
        throw std::invalid_argument("RunConfig: n_init and batch_size must be >= 1");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("RunConfig: tol must be positive");
    }
    if (n_max < 1) {
        throw std::invalid_argument("RunConfig: n_max must be >= 1");
    }
    if (fixed_n && *fixed_n < n_init) {
        throw std::invalid_argument("RunConfig: fixed_n below n_init");
    }
    if (gp_starts < 1 || gp_starts_warm < 1) {
        throw std::invalid_argument("RunConfig: GP multistart counts must be >= 1");
    }
}

bool check_convergence(const Eigen::VectorXd& beta_current, const Eigen::VectorXd& beta_old, double tol)
{
    if (beta_current.size() != beta_old.size()) {
        throw DimensionError("check_convergence: coefficient vectors differ in length");
    }
    const double denom = beta_current.norm();
    if (!(denom > 0.0)) {
        return false;
    }
    return (beta_current - beta_old).norm() / denom < tol;
}

SystemEstimate fit_system(const basis::BasisLibrary& lib, std::span<const Observation> obs)
{
    if (obs.empty()) {
        throw DimensionError("fit_system: no observations");
    }
    varsel::RegressionProblem problem;
    problem.model_matrix = basis::model_matrix(lib, obs);
    SystemEstimate out;
    const Index d = obs.front().time_derivative.size();
    for (Index r = 0; r < d; ++r) {
        problem.response = response_column(obs, r);
        out.push_back(varsel::forward_stepwise_bic(problem));
    }
    return out;
}

std::vector<Index> initial_design(const CandidatePool& pool, Index n, InitialDesign kind, std::uint64_t seed)
{
    if (n > pool.available_count()) {
        throw DomainError("initial_design: pool too small");
    }
    std::mt19937_64 rng(seed);
    std::vector<Index> avail = pool.available_indices();
    if (kind == InitialDesign::Random) {
        // Partial Fisher-Yates.
        for (Index i = 0; i < n; ++i) {
            std::uniform_int_distribution<Index> pick(i, static_cast<Index>(avail.size()) - 1);
            std::swap(avail[static_cast<std::size_t>(i)], avail[static_cast<std::size_t>(pick(rng))]);
        }
        avail.resize(static_cast<std::size_t>(n));
        return avail;
    }

    // Latin-hypercube sample in the pool's bounding box, snapped to the nearest
    // unused pool point.
    const Eigen::MatrixXd& x = pool.coordinate_matrix();
    const Index p = x.cols();
    const Eigen::RowVectorXd lo = x.colwise().minCoeff();
    const Eigen::RowVectorXd hi = x.colwise().maxCoeff();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd target(n, p);
    for (Index s = 0; s < p; ++s) {
        std::vector<Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (Index i = 0; i < n; ++i) {
            const double u = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unif(rng)) / static_cast<double>(n);
            target(i, s) = lo[s] + u * (hi[s] - lo[s]);
        }
    }
    std::vector<char> used(static_cast<std::size_t>(pool.size()), 0);
    std::vector<Index> out;
    for (Index i = 0; i < n; ++i) {
        Index best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (Index j : avail) {
            if (used[static_cast<std::size_t>(j)] != 0) {
                continue;
            }
            const double dd = (x.row(j) - target.row(i)).squaredNorm();
            if (dd < best_d) {
                best_d = dd;
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        out.push_back(best);
    }
    return out;
}

RunRecord run(const RunConfig& config, DataOracle& oracle, const basis::BasisLibrary& lib, CandidatePool pool,
              std::span<const EstimatedEquation> truth)
{
    config.validate();
    if (pool.available_count() < config.n_init + config.batch_size) {
        throw DomainError("run: pool smaller than n_init + batch_size");
    }
    if (pool.dim() != lib.p()) {
        throw DimensionError("run: pool dimension differs from the library's coordinate count");
    }

    RunRecord rec;
    std::vector<Observation> obs;
    const bool fixed = config.fixed_n.has_value();
    const Index d = lib.d();
    std::vector<std::optional<gp::GpHyperparams>> warm(static_cast<std::size_t>(d));

    auto finish = [&]() {
        rec.n_total = static_cast<Index>(obs.size());
        if (!obs.empty()) {
            try {
                rec.estimate = fit_system(lib, obs);
                if (!truth.empty()) {
                    rec.metrics = compute_metrics(rec.estimate, truth, static_cast<std::int64_t>(rec.n_total));
                }
            } catch (const std::exception& e) {
                if (!rec.aborted) {
                    rec.aborted = true;
                    rec.abort_message = e.what();
                }
            }
        }
        rec.metrics.n_total = static_cast<std::int64_t>(rec.n_total);
        return rec;
    };

    try {
        const std::vector<Index> init =
            initial_design(pool, config.n_init, config.initial_design, derive_seed(config.seed, {1}));
        std::vector<DesignPoint> pts;
        for (Index i : init) {
            pool.mark_selected(i);
            pts.push_back(pool.point(i));
        }
        obs = collect(oracle, pts);
        rec.design = pts;
    } catch (const std::exception& e) {
        rec.aborted = true;
        rec.abort_message = e.what();
        return finish();
    }

    const Index k = lib.size();
    Eigen::VectorXd beta_c = Eigen::VectorXd::Ones(k * d);
    Eigen::VectorXd beta_o = Eigen::VectorXd::Zero(k * d);
    Index n = static_cast<Index>(obs.size());
    std::uint64_t iter = 0;

    while (true) {
        if (fixed) {
            if (n >= *config.fixed_n) {
                rec.reason = ConvergenceReason::FIXED_N;
                break;
            }
        } else {
            if (check_convergence(beta_c, beta_o, config.tol)) {
                rec.reason = ConvergenceReason::TOL_REACHED;
                break;
            }
            const bool budget_ok = config.strict_budget ? n + config.batch_size <= config.n_max : n <= config.n_max;
            if (!budget_ok) {
                rec.reason = ConvergenceReason::N_MAX;
                break;
            }
        }
        Index b = config.batch_size;
        if (fixed) {
            b = std::min(b, *config.fixed_n - n);
        }
        if (pool.available_count() < b) {
            rec.reason = fixed ? ConvergenceReason::FIXED_N : ConvergenceReason::N_MAX;
            break;
        }
        ++iter;
        const std::uint64_t iter_seed = derive_seed(config.seed, {2, iter});

        try {
            beta_o = beta_c;
            IterationRecord it;
            const SystemEstimate est = fit_system(lib, obs);
            beta_c = stack_coefficients(est);
            it.beta = beta_c;
            std::vector<double> sig2;
            std::vector<double> var;
            for (Index r = 0; r < d; ++r) {
                sig2.push_back(est[static_cast<std::size_t>(r)].sigma2_hat);
                var.push_back(sample_variance(response_column(obs, r)));
            }
            it.sigma2_hat = std::accumulate(sig2.begin(), sig2.end(), 0.0) / static_cast<double>(d);

            std::vector<DesignPoint> selected = rec.design;
            design::AcdsWeights w;
            Eigen::MatrixXd rows;
            Eigen::MatrixXd m_obs;
            double rho = 0.0;

            if (config.criterion == Criterion::MAXIMIN_ONLY) {
                w.alpha1 = 1.0;
                w.alpha2 = 0.0;
            } else {
                const Eigen::MatrixXd inputs = gp::to_matrix(rec.design);
                const std::vector<gp::GpModel> models = fit_surrogates(inputs, obs, d, config, iter_seed, warm);
                double tau2 = 0.0;
                double state_var = 0.0;
                for (Index r = 0; r < d; ++r) {
                    tau2 += gp::loo_cv_error(models[static_cast<std::size_t>(r)]);
                    state_var += sample_variance(state_column(obs, r));
                }
                tau2 /= static_cast<double>(d);
                state_var /= static_cast<double>(d);
                it.tau2_cv = tau2;

                if (config.criterion == Criterion::D_OPTIMAL_ONLY) {
                    w.alpha1 = 0.0;
                    w.alpha2 = 1.0;
                } else {
                    double s2 = it.sigma2_hat;
                    double t2 = tau2;
                    if (config.normalize_weights) {
                        const double resp_var = std::accumulate(var.begin(), var.end(), 0.0) / static_cast<double>(d);
                        s2 = resp_var > 0.0 ? s2 / resp_var : s2;
                        t2 = state_var > 0.0 ? t2 / state_var : t2;
                    }
                    w = design::adaptive_weights(s2, t2);
                }
                bool all_var = true;
                for (double v : var) {
                    all_var = all_var && v > 0.0;
                }
                rho = all_var ? design::noise_to_signal_rho(sig2, var) : 0.0;
                rho = std::max(rho, kRhoFloor);
                rows = basis::eval_surrogate_rows(lib, models, pool.coordinate_matrix(), config.exec);
                m_obs = basis::model_matrix(lib, obs);
            }
            it.alpha1 = w.alpha1;
            it.alpha2 = w.alpha2;
            it.weights_degenerate = w.degenerate;
            it.rho = rho;

            design::DesignState state(m_obs, rho, std::move(selected));
            const std::vector<Index> picked = design::select_batch(pool, state, rows, w, b, config.exec);
            std::vector<DesignPoint> batch;
            for (Index i : picked) {
                batch.push_back(pool.point(i));
            }
            std::vector<Observation> fresh = collect(oracle, batch);
            obs.insert(obs.end(), fresh.begin(), fresh.end());
            rec.design.insert(rec.design.end(), batch.begin(), batch.end());
            n = static_cast<Index>(obs.size());
            it.n = n;
            it.batch = std::move(batch);
            rec.iterations.push_back(std::move(it));
        } catch (const std::exception& e) {
            rec.aborted = true;
            rec.abort_message = e.what();
            return finish();
        }
    }
    return finish();
}

} // namespace acds::activelearn
