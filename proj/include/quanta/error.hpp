// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace quanta {

// Shape or extent validation failure: bad axis factorizations, mismatched
// gate extents, out-of-range axes, malformed plans.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent einsum expression or operands.
struct ContractionError : std::runtime_error {
    explicit ContractionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or diverged iterations.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// File format / filesystem failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace quanta
