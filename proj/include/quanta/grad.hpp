// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "quanta/dense_tensor.hpp"
#include "quanta/error.hpp"
#include "quanta/gate_apply.hpp"
#include "quanta/matrix.hpp"
#include "quanta/plan.hpp"

namespace quanta {

/// Forward pass keeping the intermediate state after every gate;
/// element 0 is the input, element k the state after gate k-1.
inline std::vector<DenseTensor> forward_partials(const QuantaPlan& plan, const DenseTensor& x) {
    if (!(x.shape == plan.in_shape))
        throw DimensionError("forward_partials: input shape mismatch");
    std::vector<DenseTensor> fwd;
    fwd.reserve(plan.gates.size() + 1);
    fwd.push_back(x);
    for (const GateSpec& g : plan.gates)
        fwd.push_back(apply_gate(fwd.back(), g.tensor, g.axis_m, g.axis_n, g.out_m, g.out_n));
    return fwd;
}

/// Backward sweep over precomputed forward partials.
inline std::vector<Matrix> grad_from_partials(const QuantaPlan& plan,
                                              const std::vector<DenseTensor>& fwd,
                                              const DenseTensor& upstream) {
    const std::size_t n_gates = plan.gates.size();
    if (fwd.size() != n_gates + 1)
        throw DimensionError("grad_from_partials: partials do not match the plan");
    std::vector<Matrix> grads(n_gates);
    DenseTensor cot = upstream;
    for (std::size_t k = n_gates; k-- > 0;) {
        const GateSpec& g = plan.gates[k];
        grads[k] = Matrix(g.tensor.rows, g.tensor.cols);
        accumulate_gate_grad(grads[k], cot, fwd[k], g.axis_m, g.axis_n);
        if (k > 0) {
            // Pull the cotangent through the transposed gate; in/out extents swap.
            const std::size_t in_m = fwd[k].shape.dims[g.axis_m];
            const std::size_t in_n = fwd[k].shape.dims[g.axis_n];
            cot = apply_gate(cot, transpose(g.tensor), g.axis_m, g.axis_n, in_m, in_n);
        }
    }
    return grads;
}

/// Per-gate gradients of L = <upstream, circuit(x)> summed over the batch.
/// The adjoint of a contraction chain is itself a chain: forward partials meet
/// transposed-gate backward partials at each gate, and the gradient is their
/// two-axis outer product with everything else contracted.
inline std::vector<Matrix> grad_plan(const QuantaPlan& plan, const DenseTensor& x,
                                     const DenseTensor& upstream) {
    if (!(upstream.shape == plan.out_shape) || upstream.batch != x.batch)
        throw DimensionError("grad_plan: cotangent shape mismatch");
    return grad_from_partials(plan, forward_partials(plan, x), upstream);
}

inline std::vector<double> flatten_grads(const std::vector<Matrix>& grads) {
    std::vector<double> flat;
    for (const Matrix& g : grads) flat.insert(flat.end(), g.data.begin(), g.data.end());
    return flat;
}

struct GradCheckReport {
    bool passed = false;
    double max_relative_error = 0.0;
    std::size_t worst_gate = 0;
    std::size_t worst_entry = 0;
    double tolerance = 0.0;
};

/// Central-finite-difference check of grad_plan on a random input and loss
/// direction. Relative error uses a unit floor so near-zero gradient pairs do
/// not blow up the ratio.
inline GradCheckReport grad_check(const QuantaPlan& plan, double tolerance,
                                  std::uint64_t seed = 1234, double step = 1e-5) {
    validate_plan(plan);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    DenseTensor x(1, plan.in_shape);
    for (double& v : x.data) v = unit(rng);
    DenseTensor up(1, plan.out_shape);
    for (double& v : up.data) v = unit(rng);

    const std::vector<Matrix> analytic = grad_plan(plan, x, up);

    auto loss = [&](const QuantaPlan& p) {
        const DenseTensor y = apply_shaped(p, x);
        double acc = 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) acc += up.data[i] * y.data[i];
        return acc;
    };

    GradCheckReport report;
    report.tolerance = tolerance;
    QuantaPlan probe = plan;
    for (std::size_t g = 0; g < plan.gates.size(); ++g) {
        for (std::size_t e = 0; e < plan.gates[g].tensor.data.size(); ++e) {
            const double saved = probe.gates[g].tensor.data[e];
            probe.gates[g].tensor.data[e] = saved + step;
            const double lp = loss(probe);
            probe.gates[g].tensor.data[e] = saved - step;
            const double lm = loss(probe);
            probe.gates[g].tensor.data[e] = saved;
            const double fd = (lp - lm) / (2.0 * step);
            const double an = analytic[g].data[e];
            const double denom = std::max({std::abs(an), std::abs(fd), 1.0});
            const double rel = std::abs(an - fd) / denom;
            if (rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_gate = g;
                report.worst_entry = e;
            }
        }
    }
    report.passed = report.max_relative_error <= tolerance;
    return report;
}

}  // namespace quanta
