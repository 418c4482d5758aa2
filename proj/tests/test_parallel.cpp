#include "doctest.h"

#include <numeric>
#include <random>

#include "acds/basis.hpp"
#include "acds/design.hpp"
#include "acds/gp.hpp"
#include "acds/parallel.hpp"

using namespace acds;

namespace {

Eigen::MatrixXd uniform(std::mt19937_64& rng, Index r, Index c)
{
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Eigen::MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) {
            m(i, j) = u(rng);
        }
    }
    return m;
}

CandidatePool pool_of(const Eigen::MatrixXd& x)
{
    std::vector<DesignPoint> pts;
    for (Index i = 0; i < x.rows(); ++i) {
        pts.emplace_back(Eigen::VectorXd(x.row(i).transpose()));
    }
    return CandidatePool(std::move(pts));
}

} // namespace

TEST_CASE("distance kernel: serial and parallel agree bit for bit")
{
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd coords = uniform(rng, 5000, 2);
    Eigen::VectorXd min_s = Eigen::VectorXd::Constant(5000, 1e300), sum_s = Eigen::VectorXd::Zero(5000);
    Eigen::VectorXd min_p = min_s, sum_p = sum_s;
    for (int k = 0; k < 10; ++k) {
        const Eigen::VectorXd x = coords.row(k * 7).transpose();
        design::kernels::accumulate_distances(coords, x, min_s, sum_s, Exec::Serial);
        design::kernels::accumulate_distances(coords, x, min_p, sum_p, Exec::Parallel);
    }
    CHECK(min_s == min_p);
    CHECK(sum_s == sum_p);
}

TEST_CASE("D-increment kernel: serial and parallel agree bit for bit")
{
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd rows_t = uniform(rng, 20, 3000);
    const Eigen::MatrixXd m = uniform(rng, 40, 20);
    const design::DesignState st(m, 0.1, {});
    std::vector<Index> cand(3000);
    std::iota(cand.begin(), cand.end(), 0);
    cand.erase(cand.begin() + 100, cand.begin() + 200);
    Eigen::VectorXd a(3000), b(3000);
    a.setZero();
    b.setZero();
    design::kernels::d_increments(rows_t, st.gram_inverse(), cand, a, Exec::Serial);
    design::kernels::d_increments(rows_t, st.gram_inverse(), cand, b, Exec::Parallel);
    CHECK(a == b);
    CHECK(a[5] == doctest::Approx(design::d_increment(st, rows_t.col(5))).epsilon(1e-12));
}

TEST_CASE("surrogate rows and batch selection are execution independent")
{
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = uniform(rng, 30, 2);
    Eigen::VectorXd y(30);
    for (Index i = 0; i < 30; ++i) {
        y[i] = std::sin(x(i, 0)) * std::cos(0.5 * x(i, 1));
    }
    gp::GpHyperparams h;
    h.tau2 = 1.0;
    h.omega = Eigen::Vector2d(2.0, 3.0);
    h.sigma0_2 = 1e-6;
    const std::vector<gp::GpModel> models{gp::GpModel::condition(x, y, h, true)};
    const auto lib = basis::build_library(2, 1, 2, 2, false);
    const Eigen::MatrixXd grid = uniform(rng, 800, 2);
    const Eigen::MatrixXd rs = basis::eval_surrogate_rows(lib, models, grid, Exec::Serial);
    const Eigen::MatrixXd rp = basis::eval_surrogate_rows(lib, models, grid, Exec::Parallel);
    CHECK(rs == rp);

    auto pool_s = pool_of(grid);
    for (Index i = 0; i < 8; ++i) {
        pool_s.mark_selected(i);
    }
    auto pool_p = pool_s;
    std::vector<DesignPoint> sel(pool_s.points().begin(), pool_s.points().begin() + 8);
    design::DesignState s1(rs.topRows(8), 0.05, sel);
    design::DesignState s2 = s1;
    const design::AcdsWeights w{0.3, 0.7};
    CHECK(design::pool_bounds(pool_s, s1, rs, Exec::Serial).u_d == design::pool_bounds(pool_p, s2, rs, Exec::Parallel).u_d);
    const auto bs = design::select_batch(pool_s, s1, rs, w, 16, Exec::Serial);
    const auto bp = design::select_batch(pool_p, s2, rs, w, 16, Exec::Parallel);
    CHECK(bs == bp);
    CHECK(s1.gram_inverse() == s2.gram_inverse());
}

TEST_CASE("thread reporting")
{
    CHECK(max_threads() >= 1);
#ifdef ACDS_HAVE_OPENMP
    CHECK(openmp_enabled());
#endif
}
