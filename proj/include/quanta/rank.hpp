// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "quanta/error.hpp"
#include "quanta/matrix.hpp"
#include "quanta/plan.hpp"
#include "quanta/svd.hpp"

namespace quanta {

/// Numerical rank report. The rank counts singular values above
/// tolerance * sigma_max * max(extent); the bounds come from the per-gate rank
/// inequality of the circuit and are populated only on the plan path.
/// tolerance_sensitive marks plans where some gate has a singular value within
/// 10x of its threshold, so the lower bound may wobble with the tolerance.
struct RankReport {
    std::size_t numerical_rank = 0;
    std::vector<double> singular_values;
    std::size_t lower_bound = 0;
    std::size_t upper_bound = 0;
    bool has_bounds = false;
    double tolerance = 0.0;
    double threshold = 0.0;
    bool tolerance_sensitive = false;
};

namespace detail {

inline std::size_t rank_from_singulars(const std::vector<double>& sv, std::size_t max_extent,
                                       double tolerance, double* threshold_out) {
    const double sigma_max = sv.empty() ? 0.0 : sv.front();
    const double threshold = tolerance * sigma_max * static_cast<double>(max_extent);
    if (threshold_out) *threshold_out = threshold;
    std::size_t r = 0;
    for (double s : sv)
        if (s > threshold) ++r;
    return r;
}

}  // namespace detail

/// SVD-based numerical rank; tolerance 0 selects machine epsilon.
inline RankReport numerical_rank(const Matrix& m, double tolerance = 0.0) {
    if (tolerance <= 0.0) tolerance = std::numeric_limits<double>::epsilon();
    RankReport report;
    report.tolerance = tolerance;
    report.singular_values = singular_values(m);
    report.numerical_rank = detail::rank_from_singulars(
        report.singular_values, std::max(m.rows, m.cols), tolerance, &report.threshold);
    return report;
}

/// Rank bounds of the materialized circuit from the per-gate ranks:
///   sum_a d * R_a / d_a - d (N_T - 1)  <=  R  <=  min_a d * R_a / d_a,
/// where d is the total dimension and d_a the gate dimension. Requires a
/// square plan. Also measures the rank of the materialized operator with the
/// same tolerance regime.
inline RankReport theorem2_bounds(const QuantaPlan& plan, double tolerance = 0.0) {
    validate_plan(plan);
    if (!(plan.in_shape == plan.out_shape) || plan.in_len != 0 || plan.out_len != 0)
        throw DimensionError("rank bounds need a square plan");
    for (const GateSpec& g : plan.gates)
        if (g.tensor.rows != g.tensor.cols)
            throw DimensionError("rank bounds need square gates");
    if (tolerance <= 0.0) tolerance = std::numeric_limits<double>::epsilon();

    const std::size_t d = plan.in_shape.total();
    RankReport report = numerical_rank(materialize(plan), tolerance);
    report.has_bounds = true;
    for (double s : report.singular_values)
        if (s > report.threshold / 10.0 && s < report.threshold * 10.0)
            report.tolerance_sensitive = true;

    std::size_t upper = d;
    // The lower bound can go negative before clamping; track it signed.
    long long lower = static_cast<long long>(d);
    if (!plan.gates.empty()) {
        long long sum = 0;
        upper = std::numeric_limits<std::size_t>::max();
        for (const GateSpec& g : plan.gates) {
            const std::size_t d_gate = g.tensor.rows;
            double thr = 0.0;
            const auto sv = singular_values(g.tensor);
            const std::size_t r_gate = detail::rank_from_singulars(sv, d_gate, tolerance, &thr);
            for (double s : sv)
                if (s > thr / 10.0 && s < thr * 10.0) report.tolerance_sensitive = true;
            const std::size_t scaled = (d / d_gate) * r_gate;
            sum += static_cast<long long>(scaled);
            upper = std::min(upper, scaled);
        }
        lower = sum - static_cast<long long>(d) *
                          static_cast<long long>(plan.gates.size() - 1);
    }
    report.lower_bound = lower > 0 ? static_cast<std::size_t>(lower) : 0;
    report.upper_bound = upper;
    return report;
}

/// Frobenius-optimal rank-r approximation error of `m`, relative to its norm:
/// sqrt(sum of squared tail singular values) / ||m||_F. The hard floor for any
/// rank-r update trying to match m.
inline double eckart_young_floor(const Matrix& m, std::size_t r) {
    const auto sv = singular_values(m);
    double total = 0.0, tail = 0.0;
    for (std::size_t k = 0; k < sv.size(); ++k) {
        total += sv[k] * sv[k];
        if (k >= r) tail += sv[k] * sv[k];
    }
    if (total == 0.0) return 0.0;
    return std::sqrt(tail / total);
}

}  // namespace quanta
