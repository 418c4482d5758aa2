#include "acds/design.hpp"

#include <algorithm>

namespace acds::design::kernels {

namespace {

inline void distance_step(const Eigen::MatrixXd& coords, const Eigen::Ref<const Eigen::VectorXd>& x, Index i,
                          Eigen::VectorXd& min_d2, Eigen::VectorXd& sum_d2)
{
    double d2 = 0.0;
    for (Index s = 0; s < coords.cols(); ++s) {
        const double diff = coords(i, s) - x[s];
        d2 += diff * diff;
    }
    min_d2[i] = std::min(min_d2[i], d2);
    sum_d2[i] += d2;
}

inline double quad_form(const Eigen::MatrixXd& rows_t, const Eigen::MatrixXd& ginv, Index c)
{
    const Index k = rows_t.rows();
    const double* m = rows_t.col(c).data();
    double acc = 0.0;
    for (Index a = 0; a < k; ++a) {
        const double* g = ginv.col(a).data();
        double inner = 0.0;
        for (Index b = 0; b < k; ++b) {
            inner += g[b] * m[b];
        }
        acc += m[a] * inner;
    }
    return 1.0 + acc;
}

} // namespace

void accumulate_distances(const Eigen::MatrixXd& coords, const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::VectorXd& min_d2, Eigen::VectorXd& sum_d2, Exec exec)
{
    if (x.size() != coords.cols()) {
        throw DimensionError("accumulate_distances: dimension mismatch");
    }
    const Index n = coords.rows();
    if (exec == Exec::Serial) {
        for (Index i = 0; i < n; ++i) {
            distance_step(coords, x, i, min_d2, sum_d2);
        }
    } else {
#pragma omp parallel for schedule(static)
        for (Index i = 0; i < n; ++i) {
            distance_step(coords, x, i, min_d2, sum_d2);
        }
    }
}

void d_increments(const Eigen::MatrixXd& rows_t, const Eigen::MatrixXd& gram_inverse,
                  std::span<const Index> candidates, Eigen::VectorXd& out, Exec exec)
{
    if (gram_inverse.rows() != rows_t.rows()) {
        throw DimensionError("d_increments: basis length differs from Gram size");
    }
    const auto count = static_cast<Index>(candidates.size());
    out.resize(count);
    if (exec == Exec::Serial) {
        for (Index c = 0; c < count; ++c) {
            out[c] = quad_form(rows_t, gram_inverse, candidates[static_cast<std::size_t>(c)]);
        }
    } else {
#pragma omp parallel for schedule(static)
        for (Index c = 0; c < count; ++c) {
            out[c] = quad_form(rows_t, gram_inverse, candidates[static_cast<std::size_t>(c)]);
        }
    }
}

} // namespace acds::design::kernels
