// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "quanta/dense_tensor.hpp"
#include "quanta/error.hpp"
#include "quanta/matrix.hpp"

namespace quanta {

namespace detail {

// Odometer over the axes not touched by the gate (batch included), tracking
// base offsets into both the input and the output layouts.
struct RestIter {
    std::vector<std::size_t> extents;
    std::vector<std::size_t> in_strides;
    std::vector<std::size_t> out_strides;
    std::vector<std::size_t> idx;
    std::size_t in_base = 0;
    std::size_t out_base = 0;
    std::size_t count = 1;

    bool next() {
        for (std::size_t k = extents.size(); k-- > 0;) {
            ++idx[k];
            in_base += in_strides[k];
            out_base += out_strides[k];
            if (idx[k] < extents[k]) return true;
            in_base -= in_strides[k] * extents[k];
            out_base -= out_strides[k] * extents[k];
            idx[k] = 0;
        }
        return false;
    }
};

inline std::vector<std::size_t> row_major_strides(const std::vector<std::size_t>& extents) {
    std::vector<std::size_t> s(extents.size(), 1);
    for (std::size_t k = extents.size(); k-- > 1;) s[k - 1] = s[k] * extents[k];
    return s;
}

}  // namespace detail

/// Applies a two-axis gate: y[..., i_m, ..., i_n, ...] =
///   sum_{j_m, j_n} gate[(i_m * out_n + i_n), (j_m * d_n + j_n)] * x[..., j_m, ..., j_n, ...]
/// with every other axis, batch included, treated as a batch dimension. The
/// output extents on the two axes are (out_m, out_n); square gates keep the
/// input shape.
inline DenseTensor apply_gate(const DenseTensor& x, const Matrix& gate, std::size_t axis_m,
                              std::size_t axis_n, std::size_t out_m, std::size_t out_n) {
    const auto& dims = x.shape.dims;
    const std::size_t n_axes = dims.size();
    if (axis_m == axis_n)
        throw DimensionError("gate axes must differ, got (" + std::to_string(axis_m) + "," +
                             std::to_string(axis_n) + ")");
    if (axis_m >= n_axes || axis_n >= n_axes)
        throw DimensionError("gate axis out of range for shape " + x.shape.str());
    const std::size_t in_m = dims[axis_m];
    const std::size_t in_n = dims[axis_n];
    if (gate.cols != in_m * in_n)
        throw DimensionError("gate columns " + std::to_string(gate.cols) +
                             " != d_m*d_n = " + std::to_string(in_m * in_n));
    if (gate.rows != out_m * out_n)
        throw DimensionError("gate rows " + std::to_string(gate.rows) +
                             " != out_m*out_n = " + std::to_string(out_m * out_n));

    std::vector<std::size_t> out_dims = dims;
    out_dims[axis_m] = out_m;
    out_dims[axis_n] = out_n;
    DenseTensor y(x.batch, AxisShape(out_dims));

    // Full layouts are [batch, axes...]; the gate axes shift by one.
    std::vector<std::size_t> in_full{x.batch};
    in_full.insert(in_full.end(), dims.begin(), dims.end());
    std::vector<std::size_t> out_full{x.batch};
    out_full.insert(out_full.end(), out_dims.begin(), out_dims.end());
    const auto in_strides = detail::row_major_strides(in_full);
    const auto out_strides = detail::row_major_strides(out_full);
    const std::size_t m = axis_m + 1, n = axis_n + 1;

    detail::RestIter rest;
    for (std::size_t k = 0; k < in_full.size(); ++k) {
        if (k == m || k == n) continue;
        rest.extents.push_back(in_full[k]);
        rest.in_strides.push_back(in_strides[k]);
        rest.out_strides.push_back(out_strides[k]);
        rest.count *= in_full[k];
    }
    rest.idx.assign(rest.extents.size(), 0);

    const std::size_t sxm = in_strides[m], sxn = in_strides[n];
    const std::size_t sym = out_strides[m], syn = out_strides[n];
    const double* xd = x.data.data();
    double* yd = y.data.data();
    const double* gd = gate.data.data();

    do {
        for (std::size_t im = 0; im < out_m; ++im) {
            for (std::size_t in2 = 0; in2 < out_n; ++in2) {
                const double* grow = gd + (im * out_n + in2) * gate.cols;
                double acc = 0.0;
                for (std::size_t jm = 0; jm < in_m; ++jm) {
                    const std::size_t xoff = rest.in_base + jm * sxm;
                    const double* gblk = grow + jm * in_n;
                    for (std::size_t jn = 0; jn < in_n; ++jn)
                        acc += gblk[jn] * xd[xoff + jn * sxn];
                }
                yd[rest.out_base + im * sym + in2 * syn] = acc;
            }
        }
    } while (rest.next());

    return y;
}

/// Square-gate overload: output shape equals input shape.
inline DenseTensor apply_gate(const DenseTensor& x, const Matrix& gate, std::size_t axis_m,
                              std::size_t axis_n) {
    if (axis_m >= x.shape.rank() || axis_n >= x.shape.rank() || axis_m == axis_n)
        return apply_gate(x, gate, axis_m, axis_n, 1, 1);  // reuse the error paths
    if (gate.rows != gate.cols)
        throw DimensionError("square apply_gate needs a square gate; pass output extents");
    return apply_gate(x, gate, axis_m, axis_n, x.shape.dims[axis_m], x.shape.dims[axis_n]);
}

/// Accumulates the gate gradient of a circuit step: given the cotangent u at the
/// step output and the step input x_prev,
///   grad[(i_m * out_n + i_n), (j_m * in_n + j_n)] +=
///       sum_rest u[..., i_m, ..., i_n, ...] * x_prev[..., j_m, ..., j_n, ...].
inline void accumulate_gate_grad(Matrix& grad, const DenseTensor& u, const DenseTensor& x_prev,
                                 std::size_t axis_m, std::size_t axis_n) {
    const auto& udims = u.shape.dims;
    const auto& xdims = x_prev.shape.dims;
    if (udims.size() != xdims.size())
        throw DimensionError("gradient: cotangent and input rank mismatch");
    const std::size_t out_m = udims[axis_m], out_n = udims[axis_n];
    const std::size_t in_m = xdims[axis_m], in_n = xdims[axis_n];
    if (grad.rows != out_m * out_n || grad.cols != in_m * in_n)
        throw DimensionError("gradient accumulator extent mismatch");
    if (u.batch != x_prev.batch)
        throw DimensionError("gradient: batch extents disagree");

    std::vector<std::size_t> u_full{u.batch};
    u_full.insert(u_full.end(), udims.begin(), udims.end());
    std::vector<std::size_t> x_full{x_prev.batch};
    x_full.insert(x_full.end(), xdims.begin(), xdims.end());
    const auto u_strides = detail::row_major_strides(u_full);
    const auto x_strides = detail::row_major_strides(x_full);
    const std::size_t m = axis_m + 1, n = axis_n + 1;

    detail::RestIter rest;
    for (std::size_t k = 0; k < u_full.size(); ++k) {
        if (k == m || k == n) continue;
        if (u_full[k] != x_full[k])
            throw DimensionError("gradient: untouched axis extents disagree");
        rest.extents.push_back(u_full[k]);
        rest.in_strides.push_back(x_strides[k]);
        rest.out_strides.push_back(u_strides[k]);
    }
    rest.idx.assign(rest.extents.size(), 0);

    const double* ud = u.data.data();
    const double* xd = x_prev.data.data();
    do {
        for (std::size_t im = 0; im < out_m; ++im)
            for (std::size_t in2 = 0; in2 < out_n; ++in2) {
                const double uv = ud[rest.out_base + im * u_strides[m] + in2 * u_strides[n]];
                if (uv == 0.0) continue;
                double* grow = grad.data.data() + (im * out_n + in2) * grad.cols;
                for (std::size_t jm = 0; jm < in_m; ++jm) {
                    const std::size_t xoff = rest.in_base + jm * x_strides[m];
                    double* gblk = grow + jm * in_n;
                    for (std::size_t jn = 0; jn < in_n; ++jn)
                        gblk[jn] += uv * xd[xoff + jn * x_strides[n]];
                }
            }
    } while (rest.next());
}

}  // namespace quanta
