// Serial vs OpenMP variants of the data-parallel kernels.

#include <random>

#include <Eigen/LU>
#include <benchmark/benchmark.h>

#include "acds/basis.hpp"
#include "acds/design.hpp"
#include "acds/gp.hpp"

namespace {

using namespace acds;

Eigen::MatrixXd random_matrix(Index r, Index c, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Index j = 0; j < c; ++j) {
        for (Index i = 0; i < r; ++i) {
            m(i, j) = n(rng);
        }
    }
    return m;
}

Exec exec_of(const benchmark::State& st) { return st.range(1) == 0 ? Exec::Serial : Exec::Parallel; }

void BM_Distances(benchmark::State& st)
{
    const Eigen::MatrixXd pool = random_matrix(st.range(0), 2, 1);
    const Eigen::VectorXd x = pool.row(0).transpose();
    Eigen::VectorXd mn = Eigen::VectorXd::Constant(pool.rows(), 1e300);
    Eigen::VectorXd sm = Eigen::VectorXd::Zero(pool.rows());
    for (auto _ : st) {
        design::kernels::accumulate_distances(pool, x, mn, sm, exec_of(st));
        benchmark::DoNotOptimize(mn.data());
    }
}

void BM_DIncrements(benchmark::State& st)
{
    const Index k = 21;
    const Eigen::MatrixXd rows_t = random_matrix(k, st.range(0), 2);
    const Eigen::MatrixXd a = random_matrix(k, k, 3);
    const Eigen::MatrixXd ginv = (a * a.transpose() + Eigen::MatrixXd::Identity(k, k)).inverse();
    std::vector<Index> cand(static_cast<std::size_t>(st.range(0)));
    for (std::size_t i = 0; i < cand.size(); ++i) {
        cand[i] = static_cast<Index>(i);
    }
    Eigen::VectorXd out;
    for (auto _ : st) {
        design::kernels::d_increments(rows_t, ginv, cand, out, exec_of(st));
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_SurrogateRows(benchmark::State& st)
{
    const Index n = 120;
    Eigen::MatrixXd x(n, 1);
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = 10.0 * static_cast<double>(i) / static_cast<double>(n - 1);
        y[i] = std::sin(x(i, 0)) * std::exp(-0.1 * x(i, 0));
    }
    gp::GpHyperparams h;
    h.tau2 = 1.0;
    h.omega = Eigen::VectorXd::Constant(1, 1.0);
    h.sigma0_2 = 1e-6;
    const std::vector<gp::GpModel> models{gp::GpModel::condition(x, y, h, true)};
    const basis::BasisLibrary lib = basis::burgers_library();
    Eigen::MatrixXd pts(st.range(0), 1);
    for (Index i = 0; i < pts.rows(); ++i) {
        pts(i, 0) = 10.0 * static_cast<double>(i) / static_cast<double>(pts.rows() - 1);
    }
    for (auto _ : st) {
        Eigen::MatrixXd rows = basis::eval_surrogate_rows(lib, models, pts, exec_of(st));
        benchmark::DoNotOptimize(rows.data());
    }
}

} // namespace

BENCHMARK(BM_Distances)->ArgsProduct({{1024, 100000}, {0, 1}});
BENCHMARK(BM_DIncrements)->ArgsProduct({{1024, 4000}, {0, 1}});
BENCHMARK(BM_SurrogateRows)->ArgsProduct({{1000, 4000}, {0, 1}});

BENCHMARK_MAIN();
