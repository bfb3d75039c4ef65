// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "quanta/axis_shape.hpp"
#include "quanta/dense_tensor.hpp"
#include "quanta/error.hpp"
#include "quanta/gate_apply.hpp"
#include "quanta/einsum.hpp"
#include "quanta/matrix.hpp"

namespace quanta {

/// One two-axis tensor of the circuit. The matrix maps the flattened (m, n)
/// block of the input to the flattened block of the output; square unless this
/// gate is the plan's rectangular slot. A gate's label is its position in the
/// plan's ordered gate list.
struct GateSpec {
    std::size_t axis_m = 0;
    std::size_t axis_n = 0;
    std::size_t out_m = 0;  // output extents on (axis_m, axis_n)
    std::size_t out_n = 0;
    Matrix tensor;          // (out_m*out_n) x (in_m*in_n)
};

/// An ordered sequence of gates applied to an axis-factored vector. List order
/// is application order. in_len/out_len are the external vector lengths when
/// they differ from the axis-shape totals (the input is padded or truncated to
/// in_shape.total(), the output truncated or padded to out_len); 0 means the
/// shape total.
struct QuantaPlan {
    AxisShape in_shape;
    AxisShape out_shape;
    std::vector<GateSpec> gates;
    std::size_t in_len = 0;
    std::size_t out_len = 0;

    std::size_t external_in_len() const { return in_len ? in_len : in_shape.total(); }
    std::size_t external_out_len() const { return out_len ? out_len : out_shape.total(); }
};

/// Checks that tracing the axis extents through the gate sequence turns
/// in_shape into out_shape with every gate extent-consistent at its position.
inline void validate_plan(const QuantaPlan& plan) {
    if (plan.in_shape.rank() != plan.out_shape.rank())
        throw DimensionError("plan input and output shapes need the same axis count");
    std::vector<std::size_t> dims = plan.in_shape.dims;
    for (std::size_t g = 0; g < plan.gates.size(); ++g) {
        const GateSpec& gate = plan.gates[g];
        const std::string where = "gate " + std::to_string(g);
        if (gate.axis_m == gate.axis_n)
            throw DimensionError(where + ": axes must differ");
        if (gate.axis_m >= dims.size() || gate.axis_n >= dims.size())
            throw DimensionError(where + ": axis out of range");
        const std::size_t in_m = dims[gate.axis_m], in_n = dims[gate.axis_n];
        if (gate.tensor.cols != in_m * in_n)
            throw DimensionError(where + ": tensor columns " + std::to_string(gate.tensor.cols) +
                                 " do not match axis extents " + std::to_string(in_m * in_n));
        if (gate.tensor.rows != gate.out_m * gate.out_n)
            throw DimensionError(where + ": tensor rows do not match output extents");
        if (gate.out_m == 0 || gate.out_n == 0)
            throw DimensionError(where + ": output extents must be >= 1");
        if (!all_finite(gate.tensor.data))
            throw NumericalError(where + ": non-finite tensor entries");
        dims[gate.axis_m] = gate.out_m;
        dims[gate.axis_n] = gate.out_n;
    }
    if (dims != plan.out_shape.dims)
        throw DimensionError("gate sequence maps " + plan.in_shape.str() + " to " +
                             AxisShape(dims).str() + ", expected " + plan.out_shape.str());
}

/// Builds the square all-pairs circuit: one gate per unordered axis pair in
/// combination order, entries i.i.d. Gaussian with standard deviation
/// init_scale / sqrt(d_m * d_n). `rounds` stacks the layout that many times.
inline QuantaPlan build_all_pairs_plan(const AxisShape& shape, std::uint64_t seed,
                                       double init_scale = 1.0, std::size_t rounds = 1) {
    if (shape.rank() < 2)
        throw DimensionError("all-pairs scheme needs at least 2 axes");
    if (rounds == 0)
        throw DimensionError("rounds must be >= 1");
    QuantaPlan plan;
    plan.in_shape = shape;
    plan.out_shape = shape;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const auto pairs = all_pairs_gate_axes(shape.rank());
    for (std::size_t r = 0; r < rounds; ++r) {
        for (const auto& [m, n] : pairs) {
            const std::size_t dm = shape.dims[m], dn = shape.dims[n];
            GateSpec gate;
            gate.axis_m = m;
            gate.axis_n = n;
            gate.out_m = dm;
            gate.out_n = dn;
            gate.tensor = Matrix(dm * dn, dm * dn);
            const double std_dev = init_scale / std::sqrt(static_cast<double>(dm * dn));
            for (double& v : gate.tensor.data) v = std_dev * unit(rng);
            plan.gates.push_back(std::move(gate));
        }
    }
    return plan;
}

/// Explicit-scheme constructor; validates the gate trace.
inline QuantaPlan make_plan(AxisShape in_shape, AxisShape out_shape, std::vector<GateSpec> gates,
                            std::size_t in_len = 0, std::size_t out_len = 0) {
    QuantaPlan plan{std::move(in_shape), std::move(out_shape), std::move(gates), in_len, out_len};
    validate_plan(plan);
    return plan;
}

/// Sequential gate application to a shaped tensor (no pad/truncate handling;
/// the tensor shape must equal the plan's input shape). A zero-gate plan is the
/// identity.
inline DenseTensor apply_shaped(const QuantaPlan& plan, const DenseTensor& x) {
    if (!(x.shape == plan.in_shape))
        throw DimensionError("tensor shape " + x.shape.str() + " != plan input shape " +
                             plan.in_shape.str());
    DenseTensor cur = x;
    for (const GateSpec& g : plan.gates)
        cur = apply_gate(cur, g.tensor, g.axis_m, g.axis_n, g.out_m, g.out_n);
    return cur;
}

inline DenseTensor apply(const QuantaPlan& plan, const DenseTensor& x) {
    return apply_shaped(plan, x);
}

/// Flat-vector application with the plan's external lengths: each batch row is
/// padded (or truncated) to the input shape total, run through the circuit, and
/// the result truncated (or zero-padded) to the external output length.
inline std::vector<double> apply(const QuantaPlan& plan, const std::vector<double>& x) {
    const std::size_t ext_in = plan.external_in_len();
    const std::size_t ext_out = plan.external_out_len();
    if (x.empty() || x.size() % ext_in != 0)
        throw DimensionError("input length " + std::to_string(x.size()) +
                             " is not a multiple of the plan input length " +
                             std::to_string(ext_in));
    const std::size_t batch = x.size() / ext_in;
    const std::size_t in_total = plan.in_shape.total();
    const std::size_t out_total = plan.out_shape.total();

    DenseTensor shaped(batch, plan.in_shape);
    const std::size_t copy_in = std::min(ext_in, in_total);
    for (std::size_t b = 0; b < batch; ++b)
        std::copy(x.begin() + b * ext_in, x.begin() + b * ext_in + copy_in,
                  shaped.data.begin() + b * in_total);

    DenseTensor y = apply_shaped(plan, shaped);

    std::vector<double> out(batch * ext_out, 0.0);
    const std::size_t copy_out = std::min(ext_out, out_total);
    for (std::size_t b = 0; b < batch; ++b)
        std::copy(y.data.begin() + b * out_total, y.data.begin() + b * out_total + copy_out,
                  out.begin() + b * ext_out);
    return out;
}

/// Explicitly constructs the circuit as a dense matrix of extent
/// external_out_len x external_in_len, so that materialize(plan) * x equals
/// apply(plan, x) for every x. Built by pushing the standard basis through the
/// circuit as one batch.
inline Matrix materialize(const QuantaPlan& plan) {
    validate_plan(plan);
    const std::size_t in_total = plan.in_shape.total();
    const std::size_t out_total = plan.out_shape.total();
    DenseTensor basis(in_total, plan.in_shape);
    for (std::size_t j = 0; j < in_total; ++j) basis.data[j * in_total + j] = 1.0;
    DenseTensor cols = apply_shaped(plan, basis);  // row j = image of e_j

    const std::size_t ext_in = plan.external_in_len();
    const std::size_t ext_out = plan.external_out_len();
    Matrix m(ext_out, ext_in);
    const std::size_t ncols = std::min(ext_in, in_total);
    const std::size_t nrows = std::min(ext_out, out_total);
    for (std::size_t j = 0; j < ncols; ++j)
        for (std::size_t i = 0; i < nrows; ++i)
            m.data[i * ext_in + j] = cols.data[j * out_total + i];
    return m;
}

/// Returns structurally identical (trainable, frozen) copies with identical
/// tensor values. The frozen copy is immutable by convention; callers hold it
/// const so that trainable minus frozen cancels bitwise at initialization.
inline std::pair<QuantaPlan, QuantaPlan> init_zero_delta(const QuantaPlan& plan) {
    validate_plan(plan);
    return {plan, plan};
}

struct GateCost {
    std::size_t axis_m = 0;
    std::size_t axis_n = 0;
    std::size_t gate_dim = 0;  // d_m * d_n on the input side
    std::size_t params = 0;
    std::size_t flops = 0;     // multiply-adds per token
};

/// Exact integer cost accounting: params = sum over gates of
/// (d_m*d_n)^2 (rows x cols for rectangular gates), flops per token = sum of
/// rest * rows * cols, which reduces to d * sum(d_m*d_n) in the square case.
struct ComplexityReport {
    std::size_t trainable_params = 0;
    std::size_t flops_per_token = 0;
    std::vector<GateCost> per_gate;
};

inline ComplexityReport cost(const QuantaPlan& plan) {
    validate_plan(plan);
    ComplexityReport report;
    std::vector<std::size_t> dims = plan.in_shape.dims;
    for (const GateSpec& g : plan.gates) {
        std::size_t rest = 1;
        for (std::size_t k = 0; k < dims.size(); ++k)
            if (k != g.axis_m && k != g.axis_n) rest *= dims[k];
        GateCost gc;
        gc.axis_m = g.axis_m;
        gc.axis_n = g.axis_n;
        gc.gate_dim = dims[g.axis_m] * dims[g.axis_n];
        gc.params = g.tensor.rows * g.tensor.cols;
        gc.flops = rest * g.tensor.rows * g.tensor.cols;
        report.trainable_params += gc.params;
        report.flops_per_token += gc.flops;
        report.per_gate.push_back(gc);
        dims[g.axis_m] = g.out_m;
        dims[g.axis_n] = g.out_n;
    }
    return report;
}

/// Flattened trainable parameter count without the full report.
inline std::size_t plan_param_count(const QuantaPlan& plan) {
    std::size_t n = 0;
    for (const GateSpec& g : plan.gates) n += g.tensor.data.size();
    return n;
}

inline std::vector<double> flatten_params(const QuantaPlan& plan) {
    std::vector<double> flat;
    flat.reserve(plan_param_count(plan));
    for (const GateSpec& g : plan.gates)
        flat.insert(flat.end(), g.tensor.data.begin(), g.tensor.data.end());
    return flat;
}

inline void set_params(QuantaPlan& plan, const std::vector<double>& flat) {
    if (flat.size() != plan_param_count(plan))
        throw DimensionError("parameter vector length does not match the plan");
    std::size_t off = 0;
    for (GateSpec& g : plan.gates) {
        std::copy(flat.begin() + off, flat.begin() + off + g.tensor.data.size(),
                  g.tensor.data.begin());
        off += g.tensor.data.size();
    }
}

}  // namespace quanta
