// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "quanta/axis_shape.hpp"
#include "quanta/error.hpp"
#include "quanta/matrix.hpp"

namespace quanta {

/// Axis-factored view of flat data: one flattened leading batch extent followed
/// by the axis extents, row-major with the last axis fastest.
struct DenseTensor {
    std::size_t batch = 1;
    AxisShape shape;
    std::vector<double> data;

    DenseTensor() = default;
    DenseTensor(std::size_t b, AxisShape s)
        : batch(b), shape(std::move(s)), data(b * shape.total(), 0.0) {}
    DenseTensor(std::size_t b, AxisShape s, std::vector<double> d)
        : batch(b), shape(std::move(s)), data(std::move(d)) {
        if (data.size() != batch * shape.total())
            throw DimensionError("tensor payload length " + std::to_string(data.size()) +
                                 " != batch " + std::to_string(batch) + " x shape " +
                                 shape.str());
    }
};

/// Reinterprets a flat vector as an axis-factored tensor. The length must be a
/// multiple of the shape's total extent; the quotient becomes the batch extent.
/// Round trip with flatten() is the identity on the data.
inline DenseTensor reshape_to_axes(std::vector<double> v, const AxisShape& shape) {
    const std::size_t total = shape.total();
    if (v.size() == 0 || v.size() % total != 0)
        throw DimensionError("vector length " + std::to_string(v.size()) +
                             " is not a multiple of shape total " + std::to_string(total));
    const std::size_t batch = v.size() / total;
    return DenseTensor(batch, shape, std::move(v));
}

inline std::vector<double> flatten(const DenseTensor& t) { return t.data; }

}  // namespace quanta
