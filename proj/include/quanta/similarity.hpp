// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "quanta/error.hpp"
#include "quanta/matrix.hpp"
#include "quanta/rank.hpp"
#include "quanta/svd.hpp"

namespace quanta {

/// Normalized overlap grid between the leading right-singular subspaces of two
/// weight updates: phi(i, j) = ||V1[:, :i]^T V2[:, :j]||_F^2 / min(i, j).
/// Cells are populated only for i <= j (1-based); r1/r2 record the numerical
/// ranks of the compared matrices and truncated flags a request past them.
struct SimilarityGrid {
    std::size_t max_i = 0;
    std::size_t max_j = 0;
    std::size_t r1 = 0;
    std::size_t r2 = 0;
    bool truncated = false;
    std::vector<double> phi;  // row-major max_i x max_j, NaN where i > j

    double at(std::size_t i, std::size_t j) const {  // 1-based
        if (i == 0 || j == 0 || i > max_i || j > max_j)
            throw DimensionError("similarity grid index out of range");
        return phi[(i - 1) * max_j + (j - 1)];
    }
};

namespace detail {

// ||V1[:, :i]^T V2[:, :j]||_F^2 accumulated column pair by column pair.
inline double cross_gram_sq(const Matrix& v1, const Matrix& v2, std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < i; ++k)
        for (std::size_t l = 0; l < j; ++l) {
            double dot = 0.0;
            for (std::size_t row = 0; row < v1.rows; ++row)
                dot += v1.data[row * v1.cols + k] * v2.data[row * v2.cols + l];
            acc += dot * dot;
        }
    return acc;
}

}  // namespace detail

/// Single phi value for arbitrary index order (used for the symmetry property;
/// the grid itself covers i <= j).
inline double subspace_phi(const Matrix& w1, const Matrix& w2, std::size_t i, std::size_t j) {
    if (w1.cols != w2.cols)
        throw DimensionError("subspace similarity needs equal column counts");
    if (i == 0 || j == 0) throw DimensionError("subspace indices are 1-based");
    const SvdResult s1 = svd(w1, true);
    const SvdResult s2 = svd(w2, true);
    if (i > s1.v.cols || j > s2.v.cols)
        throw DimensionError("subspace index exceeds available singular vectors");
    return detail::cross_gram_sq(s1.v, s2.v, i, j) / static_cast<double>(std::min(i, j));
}

inline SimilarityGrid subspace_similarity(const Matrix& w1, const Matrix& w2, std::size_t max_i,
                                          std::size_t max_j) {
    if (w1.cols != w2.cols)
        throw DimensionError("subspace similarity needs equal column counts");
    if (max_i == 0 || max_j == 0)
        throw DimensionError("subspace grid extents must be >= 1");

    SimilarityGrid grid;
    grid.r1 = numerical_rank(w1).numerical_rank;
    grid.r2 = numerical_rank(w2).numerical_rank;
    if (max_i > grid.r1) {
        max_i = grid.r1;
        grid.truncated = true;
    }
    if (max_j > grid.r2) {
        max_j = grid.r2;
        grid.truncated = true;
    }
    if (max_i == 0 || max_j == 0)
        throw DimensionError("matrix rank deficient below any requested index");
    grid.max_i = max_i;
    grid.max_j = max_j;
    grid.phi.assign(max_i * max_j, std::numeric_limits<double>::quiet_NaN());

    const SvdResult s1 = svd(w1, true);
    const SvdResult s2 = svd(w2, true);

    // Squared cross-Gram entries, then 2-D prefix sums: phi(i, j) is the sum of
    // the leading i x j block over min(i, j).
    std::vector<double> gram_sq(max_i * max_j, 0.0);
    for (std::size_t k = 0; k < max_i; ++k)
        for (std::size_t l = 0; l < max_j; ++l) {
            double dot = 0.0;
            for (std::size_t row = 0; row < w1.cols; ++row)
                dot += s1.v.data[row * s1.v.cols + k] * s2.v.data[row * s2.v.cols + l];
            gram_sq[k * max_j + l] = dot * dot;
        }
    std::vector<double> prefix(max_i * max_j, 0.0);
    for (std::size_t k = 0; k < max_i; ++k)
        for (std::size_t l = 0; l < max_j; ++l) {
            double s = gram_sq[k * max_j + l];
            if (k > 0) s += prefix[(k - 1) * max_j + l];
            if (l > 0) s += prefix[k * max_j + (l - 1)];
            if (k > 0 && l > 0) s -= prefix[(k - 1) * max_j + (l - 1)];
            prefix[k * max_j + l] = s;
        }
    for (std::size_t i = 1; i <= max_i; ++i)
        for (std::size_t j = i; j <= max_j; ++j)
            grid.phi[(i - 1) * max_j + (j - 1)] =
                prefix[(i - 1) * max_j + (j - 1)] / static_cast<double>(std::min(i, j));
    return grid;
}

}  // namespace quanta
