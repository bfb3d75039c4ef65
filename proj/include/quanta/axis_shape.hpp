// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "quanta/error.hpp"

namespace quanta {

/// Factorization of a hidden dimension into axis extents, d = d1 * d2 * ... * dN.
/// Two shapes are compatible for gate application iff they are equal.
struct AxisShape {
    std::vector<std::size_t> dims;

    AxisShape() = default;
    AxisShape(std::initializer_list<std::size_t> d) : dims(d) { validate(); }
    explicit AxisShape(std::vector<std::size_t> d) : dims(std::move(d)) { validate(); }

    std::size_t rank() const { return dims.size(); }

    std::size_t total() const {
        std::size_t t = 1;
        for (std::size_t d : dims) t *= d;
        return t;
    }

    bool operator==(const AxisShape&) const = default;

    std::string str() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) os << ',';
            os << dims[i];
        }
        os << ')';
        return os.str();
    }

private:
    void validate() const {
        if (dims.empty())
            throw DimensionError("axis shape needs at least one axis");
        for (std::size_t d : dims)
            if (d == 0)
                throw DimensionError("axis extents must be >= 1, got " + str());
    }
};

}  // namespace quanta
