#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <Eigen/LU>

#include "acds/design.hpp"

using namespace acds;
using namespace acds::design;

namespace {

Eigen::MatrixXd gaussian(std::mt19937_64& rng, Index r, Index c)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) {
            m(i, j) = g(rng);
        }
    }
    return m;
}

CandidatePool random_pool(std::mt19937_64& rng, Index n, Index p)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DesignPoint> pts;
    for (Index i = 0; i < n; ++i) {
        Eigen::VectorXd x(p);
        for (Index s = 0; s < p; ++s) {
            x[s] = u(rng);
        }
        pts.emplace_back(x);
    }
    return CandidatePool(std::move(pts));
}

} // namespace

TEST_CASE("d_increment basics")
{
    const DesignState s(Eigen::MatrixXd::Identity(2, 2), 0.0, {});
    CHECK(d_increment(s, Eigen::Vector2d(1.0, 0.0)) == doctest::Approx(2.0));
    CHECK(d_increment(s, Eigen::Vector2d::Zero()) == 1.0);
    CHECK_THROWS_AS(d_increment(s, Eigen::Vector3d::Zero()), DimensionError);
}

TEST_CASE("d_increment equals the determinant ratio")
{
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        const Index k = 1 + rep % 8;
        const Eigen::MatrixXd m = gaussian(rng, k + 2, k);
        const DesignState s(m, 0.1, {});
        const Eigen::VectorXd a = gaussian(rng, k, 1);
        const Eigen::MatrixXd g = m.transpose() * m + 0.1 * Eigen::MatrixXd::Identity(k, k);
        const double ratio = (g + a * a.transpose()).determinant() / g.determinant();
        CHECK(std::abs(d_increment(s, a) - ratio) <= 1e-9 * ratio);
        CHECK(d_increment(s, a) >= 1.0);
    }
}

TEST_CASE("min_distance")
{
    const std::vector<DesignPoint> sel{DesignPoint{0.0}, DesignPoint{1.0}};
    CHECK(min_distance(DesignPoint{0.5}, sel) == doctest::Approx(0.25));
    CHECK(min_distance(DesignPoint{1.0}, sel) == 0.0);
    CHECK_THROWS(min_distance(DesignPoint{0.5}, std::vector<DesignPoint>{}));

    std::mt19937_64 rng(2);
    const auto pool = random_pool(rng, 40, 3);
    const std::vector<DesignPoint> chosen(pool.points().begin(), pool.points().begin() + 7);
    for (Index i = 7; i < 40; ++i) {
        double brute = std::numeric_limits<double>::infinity();
        for (const auto& c : chosen) {
            brute = std::min(brute, (pool.point(i).coords() - c.coords()).squaredNorm());
        }
        CHECK(min_distance(pool.point(i), chosen) == brute);
    }
}

TEST_CASE("pool bounds equal exhaustive maxima")
{
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        auto pool = random_pool(rng, 60 + rep, 2);
        const Eigen::MatrixXd rows = gaussian(rng, pool.size(), 4);
        std::vector<DesignPoint> sel;
        Eigen::MatrixXd selrows(5, 4);
        for (Index i = 0; i < 5; ++i) {
            pool.mark_selected(i);
            sel.push_back(pool.point(i));
            selrows.row(i) = rows.row(i);
        }
        const DesignState s(selrows, 0.05, sel);
        double us = 0.0, ud = 0.0;
        for (Index i : pool.available_indices()) {
            double sum = 0.0;
            for (const auto& x : sel) {
                sum += (pool.point(i).coords() - x.coords()).squaredNorm();
            }
            us = std::max(us, sum / 5.0);
            ud = std::max(ud, d_increment(s, rows.row(i).transpose()));
            CHECK(sum / 5.0 >= min_distance(pool.point(i), sel));
        }
        const auto b = pool_bounds(pool, s, rows, Exec::Serial);
        CHECK(b.u_s == doctest::Approx(us).epsilon(1e-14));
        CHECK(b.u_d == doctest::Approx(ud).epsilon(1e-14));
    }
}

TEST_CASE("pool bounds on a single candidate")
{
    CandidatePool pool({DesignPoint{0.0}, DesignPoint{2.0}});
    pool.mark_selected(0);
    Eigen::MatrixXd rows(2, 1);
    rows << 1.0, 3.0;
    const DesignState s(rows.topRows(1), 0.0, {DesignPoint{0.0}});
    const auto b = pool_bounds(pool, s, rows);
    CHECK(b.u_s == 4.0);
    CHECK(b.u_d == doctest::Approx(10.0));
}

TEST_CASE("adaptive weights")
{
    auto w = adaptive_weights(0.3, 0.3);
    CHECK(w.alpha1 == 0.5);
    CHECK(w.alpha2 == 0.5);
    w = adaptive_weights(0.0, 2.0);
    CHECK(w.alpha1 == 1.0);
    CHECK(w.alpha2 == 0.0);
    w = adaptive_weights(1.0, 3.0);
    CHECK(w.alpha1 == 0.75);
    CHECK(w.alpha2 == 0.25);
    w = adaptive_weights(0.0, 0.0);
    CHECK(w.degenerate);
    CHECK(w.alpha1 + w.alpha2 == 1.0);
    CHECK_THROWS(adaptive_weights(-1.0, 1.0));
}

TEST_CASE("acds score degenerates to the single criteria")
{
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        auto pool = random_pool(rng, 100 + 20 * rep, 1 + rep % 2);
        const Eigen::MatrixXd rows = gaussian(rng, pool.size(), 3);
        std::vector<DesignPoint> sel;
        for (Index i = 0; i < 4; ++i) {
            pool.mark_selected(i);
            sel.push_back(pool.point(i));
        }
        const DesignState s(rows.topRows(4), 0.1, sel);
        const auto b = pool_bounds(pool, s, rows);
        Index best_mm = -1, best_d = -1, best_mm_score = -1, best_d_score = -1;
        double v_mm = -1, v_d = -1, s_mm = -1, s_d = -1;
        for (Index i : pool.available_indices()) {
            const double md = min_distance(pool.point(i), sel);
            const double di = d_increment(s, rows.row(i).transpose());
            if (md > v_mm) { v_mm = md; best_mm = i; }
            if (di > v_d) { v_d = di; best_d = i; }
            const double a = acds_score(pool.point(i), rows.row(i).transpose(), s, {1.0, 0.0}, b.u_s, b.u_d);
            const double c = acds_score(pool.point(i), rows.row(i).transpose(), s, {0.0, 1.0}, b.u_s, b.u_d);
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
            CHECK(c <= 1.0 + 1e-15);
            if (a > s_mm) { s_mm = a; best_mm_score = i; }
            if (c > s_d) { s_d = c; best_d_score = i; }
        }
        CHECK(best_mm_score == best_mm);
        CHECK(best_d_score == best_d);
    }
}

TEST_CASE("select_batch on a line picks the far endpoint first")
{
    std::vector<DesignPoint> pts;
    for (int i = 0; i <= 20; ++i) {
        pts.push_back(DesignPoint{0.05 * i});
    }
    CandidatePool pool(pts);
    pool.mark_selected(10);
    DesignState s(Eigen::MatrixXd(1, 0), 0.0, {pool.point(10)});
    const auto idx = select_batch(pool, s, Eigen::MatrixXd(21, 0), {1.0, 0.0}, 3);
    CHECK(idx.size() == 3);
    CHECK(idx[0] == 0);
    CHECK(idx[1] == 20);
    CHECK(s.n() == 4);
    for (Index i : idx) {
        CHECK_FALSE(pool.is_available(i));
    }
}

TEST_CASE("select_batch B=1 equals the score argmax and batches are distinct")
{
    std::mt19937_64 rng(5);
    auto pool = random_pool(rng, 80, 2);
    const Eigen::MatrixXd rows = gaussian(rng, 80, 3);
    std::vector<DesignPoint> sel;
    for (Index i = 0; i < 6; ++i) {
        pool.mark_selected(i);
        sel.push_back(pool.point(i));
    }
    const AcdsWeights w{0.4, 0.6};
    DesignState s(rows.topRows(6), 0.2, sel);
    const auto b = pool_bounds(pool, s, rows);
    Index best = -1;
    double v = -1.0;
    for (Index i : pool.available_indices()) {
        const double sc = acds_score(pool.point(i), rows.row(i).transpose(), s, w, b.u_s, b.u_d);
        if (sc > v) { v = sc; best = i; }
    }
    auto pool1 = pool;
    auto s1 = s;
    CHECK(select_batch(pool1, s1, rows, w, 1).front() == best);

    auto pool2 = pool;
    auto s2 = s;
    const auto batch = select_batch(pool2, s2, rows, w, 10);
    std::set<Index> uniq(batch.begin(), batch.end());
    CHECK(uniq.size() == 10);
    for (Index i : batch) {
        CHECK(i >= 6);
    }
    auto pool3 = pool;
    auto s3 = s;
    CHECK(select_batch(pool3, s3, rows, w, 10) == batch);
    CHECK_THROWS(select_batch(pool3, s3, rows, w, 100));
}

TEST_CASE("rank-1 update")
{
    DesignState one(Eigen::MatrixXd::Ones(1, 1), 0.0, {});
    one.rank1_update(Eigen::VectorXd::Ones(1));
    CHECK(one.gram_inverse()(0, 0) == doctest::Approx(0.5));

    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const Index k = 4;
        const Eigen::MatrixXd m = gaussian(rng, 6, k);
        DesignState s(m, 0.0, {});
        const Eigen::VectorXd a = gaussian(rng, k, 1);
        const Eigen::VectorXd c = gaussian(rng, k, 1);
        const Eigen::MatrixXd g = m.transpose() * m;
        const auto s1 = rank1_update(s, a);
        CHECK((s1.gram_inverse() - (g + a * a.transpose()).inverse()).cwiseAbs().maxCoeff() <= 1e-10);
        const auto s2 = rank1_update(s1, c);
        const auto s3 = rank1_update(rank1_update(s, c), a);
        const Eigen::MatrixXd direct = (g + a * a.transpose() + c * c.transpose()).inverse();
        CHECK((s2.gram_inverse() - direct).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((s3.gram_inverse() - direct).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("inverse stays accurate over long update sequences")
{
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        const Index k = 8;
        DesignState s(gaussian(rng, 10, k), 0.1, {});
        for (int u = 0; u < 50; ++u) {
            s.rank1_update(gaussian(rng, k, 1));
        }
        const Eigen::MatrixXd direct = s.gram().inverse();
        CHECK((s.gram_inverse() - direct).cwiseAbs().maxCoeff() <= 1e-6 * direct.norm());
        CHECK((s.gram_inverse() - s.gram_inverse().transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((s.gram() * s.gram_inverse() - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("noise to signal ratio")
{
    CHECK(noise_to_signal_rho(0.04, 0.16) == doctest::Approx(0.25));
    CHECK(noise_to_signal_rho(0.0, 0.16) == 0.0);
    const std::vector<double> s2{0.2, 0.8};
    const std::vector<double> v{1.0, 2.0};
    CHECK(noise_to_signal_rho(s2, v) == doctest::Approx(0.3));
    CHECK_THROWS(noise_to_signal_rho(0.1, 0.0));
}
