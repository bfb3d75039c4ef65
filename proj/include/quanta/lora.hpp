// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "quanta/error.hpp"
#include "quanta/matrix.hpp"

namespace quanta {

/// Low-rank reference adapter: delta(x) = (alpha / r) * B * (A * x), so the
/// materialized update has rank at most r. Standard init draws A Gaussian and
/// zeroes B, making the delta vanish at the start.
struct LoraAdapter {
    Matrix a;            // r x in_dim
    Matrix b;            // out_dim x r
    std::size_t rank = 0;
    double alpha = 16.0;

    double scale() const { return rank == 0 ? 0.0 : alpha / static_cast<double>(rank); }
};

inline LoraAdapter make_lora(std::size_t out_dim, std::size_t in_dim, std::size_t r,
                             std::uint64_t seed, double alpha = 16.0) {
    LoraAdapter ad;
    ad.rank = r;
    ad.alpha = alpha;
    ad.a = Matrix(r, in_dim);
    ad.b = Matrix(out_dim, r);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double std_dev = in_dim ? 1.0 / std::sqrt(static_cast<double>(in_dim)) : 0.0;
    for (double& v : ad.a.data) v = std_dev * unit(rng);
    return ad;
}

/// delta(x) = (alpha/r) * B * A * x, batched row-wise like the plan apply.
inline std::vector<double> lora_apply(const LoraAdapter& ad, const std::vector<double>& x) {
    const std::size_t in_dim = ad.a.cols;
    const std::size_t out_dim = ad.b.rows;
    if (x.empty() || x.size() % in_dim != 0)
        throw DimensionError("lora_apply: input length is not a multiple of in_dim");
    const std::size_t batch = x.size() / in_dim;
    std::vector<double> y(batch * out_dim, 0.0);
    if (ad.rank == 0) return y;
    const double s = ad.scale();
    for (std::size_t bt = 0; bt < batch; ++bt) {
        const std::vector<double> row(x.begin() + bt * in_dim, x.begin() + (bt + 1) * in_dim);
        const std::vector<double> mid = matvec(ad.a, row);
        const std::vector<double> up = matvec(ad.b, mid);
        for (std::size_t i = 0; i < out_dim; ++i) y[bt * out_dim + i] = s * up[i];
    }
    return y;
}

/// The materialized update (alpha/r) * B * A.
inline Matrix lora_delta(const LoraAdapter& ad) {
    if (ad.rank == 0) return Matrix(ad.b.rows, ad.a.cols);
    return scaled(matmul(ad.b, ad.a), ad.scale());
}

inline std::size_t lora_param_count(std::size_t r, std::size_t in_dim, std::size_t out_dim) {
    return r * (in_dim + out_dim);
}

}  // namespace quanta
