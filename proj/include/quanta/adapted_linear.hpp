// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "quanta/error.hpp"
#include "quanta/matrix.hpp"
#include "quanta/plan.hpp"

namespace quanta {

/// A linear layer with a trainable circuit delta. Construction pairs the
/// trainable circuit with a frozen copy so the layer starts exactly equal to
/// the base map:
///
///   unmerged:  y = W0 x + T(x) - S(x)        (three-term debug form)
///   merged:    y = W0' x + T(x),  W0' = W0 - materialize(S)
///
/// By default the frozen circuit is folded into the base weight right away and
/// dropped; the three-term form is kept behind the merge_offset=false flag for
/// the two-path equivalence check.
struct AdaptedLinear {
    Matrix base;  // W0, or the offset-adjusted W0' once merged
    bool merged_offset_applied = false;
    QuantaPlan plan;                         // trainable
    std::optional<QuantaPlan> frozen_plan;   // present only in the unmerged form
};

inline AdaptedLinear make_adapted_linear(Matrix base, const QuantaPlan& plan,
                                         bool merge_offset = true) {
    auto [trainable, frozen] = init_zero_delta(plan);
    if (base.rows != plan.external_out_len() || base.cols != plan.external_in_len())
        throw DimensionError("base weight extent (" + std::to_string(base.rows) + "x" +
                             std::to_string(base.cols) + ") does not match the plan");
    AdaptedLinear layer;
    layer.plan = std::move(trainable);
    if (merge_offset) {
        layer.base = sub(base, materialize(frozen));
        layer.merged_offset_applied = true;
    } else {
        layer.base = std::move(base);
        layer.frozen_plan = std::move(frozen);
    }
    return layer;
}

/// Forward pass on one flat input (or a batch folded row-wise by the plan's
/// external input length). The circuit delta is formed before adding the base
/// term so identical trainable/frozen tensors cancel bitwise.
inline std::vector<double> forward(const AdaptedLinear& layer, const std::vector<double>& x) {
    std::vector<double> delta = apply(layer.plan, x);
    if (layer.frozen_plan) {
        const std::vector<double> frozen = apply(*layer.frozen_plan, x);
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= frozen[i];
    }
    const std::size_t in_len = layer.base.cols;
    const std::size_t batch = x.size() / in_len;
    std::vector<double> y(batch * layer.base.rows);
    for (std::size_t b = 0; b < batch; ++b) {
        const std::vector<double> row(x.begin() + b * in_len, x.begin() + (b + 1) * in_len);
        const std::vector<double> base_out = matvec(layer.base, row);
        for (std::size_t i = 0; i < base_out.size(); ++i)
            y[b * layer.base.rows + i] = base_out[i] + delta[b * layer.base.rows + i];
    }
    return y;
}

/// Collapses the layer to a single dense matrix: base + materialize(T)
/// (minus materialize(S) in the unmerged form). A plain matrix-vector product
/// with the result reproduces forward().
inline Matrix merge(const AdaptedLinear& layer) {
    Matrix m = add(layer.base, materialize(layer.plan));
    if (layer.frozen_plan) m = sub(m, materialize(*layer.frozen_plan));
    return m;
}

}  // namespace quanta
