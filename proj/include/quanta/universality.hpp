// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "quanta/error.hpp"
#include "quanta/grad.hpp"
#include "quanta/matrix.hpp"
#include "quanta/optimizer.hpp"
#include "quanta/plan.hpp"
#include "quanta/seeding.hpp"

namespace quanta {

struct FitOptions {
    std::size_t steps = 3000;
    double lr_start = 0.05;
    double lr_end = 1e-4;
    double warmup_fraction = 0.25;  // constant-lr phase before the exponential decay
    double stop_below = 0.0;        // early stop once the residual drops under this
    double init_noise = 0.5;        // gates start at I + noise * N(0, 1/sqrt(d_m d_n))
    std::size_t polish_iters = 200; // damped Gauss-Newton refinement after the descent phase
    std::size_t stall_kicks = 6;    // random perturbations allowed when the refinement stalls
    double kick_scale = 0.02;       // kick std relative to the parameter rms
    // Restart inits alternate near-identity and pure Gaussian gates; 0 = all
    // near-identity, 1 = all Gaussian.
    double gaussian_restart_fraction = 0.5;
};

namespace detail {

// Multiplying every gate by c scales the operator by c^K; fold a target scale
// back into the fitted gates.
inline void scale_gates(QuantaPlan& plan, double factor) {
    for (GateSpec& g : plan.gates)
        for (double& v : g.tensor.data) v *= factor;
}

// Jacobian of vec(materialize(plan)) (row-major, row = i * d + j) with respect
// to the flattened gate parameters, for square plans. fwd are the identity
// forward partials (batch index = operator column j). Entry for gate k:
//   dM[i, j] / dT_k[(a, b), (c, d)] =
//     sum_rest C_k[i, (rest, a, b)] * fwd[k][j, (rest, c, d)],
// where C_k is the cotangent of output entry i at the output of gate k,
// obtained by pulling the identity back through the later gates.
inline Matrix operator_jacobian(const QuantaPlan& plan, const std::vector<DenseTensor>& fwd) {
    const std::size_t d = plan.in_shape.total();
    const std::size_t n_params = plan_param_count(plan);
    Matrix jac(d * d, n_params);

    std::vector<DenseTensor> cot(plan.gates.size());
    DenseTensor back(d, plan.out_shape);
    for (std::size_t i = 0; i < d; ++i) back.data[i * d + i] = 1.0;
    for (std::size_t k = plan.gates.size(); k-- > 0;) {
        cot[k] = back;
        if (k > 0) {
            const GateSpec& g = plan.gates[k];
            const std::size_t in_m = fwd[k].shape.dims[g.axis_m];
            const std::size_t in_n = fwd[k].shape.dims[g.axis_n];
            back = apply_gate(back, transpose(g.tensor), g.axis_m, g.axis_n, in_m, in_n);
        }
    }

    std::size_t col_base = 0;
    for (std::size_t k = 0; k < plan.gates.size(); ++k) {
        const GateSpec& g = plan.gates[k];
        const DenseTensor& x = fwd[k];
        const DenseTensor& c = cot[k];
        const std::size_t out_m = g.out_m, out_n = g.out_n;
        const std::size_t in_m = x.shape.dims[g.axis_m], in_n = x.shape.dims[g.axis_n];

        // Within-batch strides over the axis extents only; the batch stride is
        // the shape total d for both tensors (square plan).
        const auto xs = row_major_strides(x.shape.dims);
        const auto cs = row_major_strides(c.shape.dims);
        const std::size_t m = g.axis_m, n = g.axis_n;

        RestIter rest;
        for (std::size_t ax = 0; ax < x.shape.rank(); ++ax) {
            if (ax == m || ax == n) continue;
            rest.extents.push_back(x.shape.dims[ax]);
            rest.in_strides.push_back(xs[ax]);
            rest.out_strides.push_back(cs[ax]);
        }
        rest.idx.assign(rest.extents.size(), 0);

        do {
            for (std::size_t a = 0; a < out_m; ++a)
                for (std::size_t b = 0; b < out_n; ++b)
                    for (std::size_t cc = 0; cc < in_m; ++cc)
                        for (std::size_t dd = 0; dd < in_n; ++dd) {
                            const std::size_t col = col_base + (a * out_n + b) * (in_m * in_n) +
                                                    cc * in_n + dd;
                            const std::size_t c_off = rest.out_base + a * cs[m] + b * cs[n];
                            const std::size_t x_off = rest.in_base + cc * xs[m] + dd * xs[n];
                            for (std::size_t i = 0; i < d; ++i) {
                                const double cv = c.data[i * d + c_off];
                                if (cv == 0.0) continue;
                                for (std::size_t j = 0; j < d; ++j)
                                    jac.data[(i * d + j) * n_params + col] +=
                                        cv * x.data[j * d + x_off];
                            }
                        }
        } while (rest.next());
        col_base += g.tensor.data.size();
    }
    return jac;
}

}  // namespace detail

struct FitResult {
    QuantaPlan plan;
    double residual = 0.0;  // relative Frobenius
    std::size_t best_restart = 0;
    std::vector<double> residual_per_restart;
    bool within_theorem_regime = true;  // all axis extents powers of two
};

namespace detail {

inline bool power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

// Stacked all-pairs layout with gates at identity plus scaled Gaussian noise.
inline QuantaPlan near_identity_plan(const AxisShape& shape, std::size_t rounds,
                                     std::uint64_t seed, double noise) {
    QuantaPlan plan = build_all_pairs_plan(shape, seed, 1.0, rounds);
    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (GateSpec& g : plan.gates) {
        const double std_dev =
            noise / std::sqrt(static_cast<double>(g.tensor.rows));
        for (std::size_t i = 0; i < g.tensor.rows; ++i)
            for (std::size_t j = 0; j < g.tensor.cols; ++j)
                g.tensor.data[i * g.tensor.cols + j] =
                    (i == j ? 1.0 : 0.0) + std_dev * unit(rng);
    }
    return plan;
}

}  // namespace detail

/// Relative Frobenius distance between the materialized circuit and the target.
inline double fit_residual(const QuantaPlan& plan, const Matrix& target) {
    const Matrix m = materialize(plan);
    return frob_norm(sub(m, target)) / frob_norm(target);
}

/// Fits a stacked all-pairs circuit to an arbitrary square target by gradient
/// descent (adaptive moments, exponentially decayed step size) with restarts.
/// Returns the best restart's plan and residual; ties resolve to the lowest
/// restart index. Per-restart trajectories depend only on (seed, restart), so
/// the merged result is independent of execution order.
inline FitResult universality_fit(const Matrix& target, const AxisShape& shape,
                                  std::size_t rounds, std::size_t restarts, std::uint64_t seed,
                                  const FitOptions& options = {}) {
    const std::size_t d = shape.total();
    if (target.rows != d || target.cols != d)
        throw DimensionError("fit target extent must equal the shape total squared");
    if (rounds == 0 || restarts == 0)
        throw DimensionError("fit needs rounds >= 1 and restarts >= 1");
    if (!all_finite(target.data)) throw NumericalError("fit target has non-finite entries");

    FitResult result;
    for (std::size_t dim : shape.dims)
        result.within_theorem_regime =
            result.within_theorem_regime && detail::power_of_two(dim);

    const double raw_norm = frob_norm(target);
    if (raw_norm == 0.0) throw NumericalError("fit target is identically zero");
    // Normalize the target to the identity's Frobenius scale so every fit
    // starts at a comparable distance; the scale folds back into the gates.
    const double target_scale = raw_norm / std::sqrt(static_cast<double>(d));
    Matrix scaled_target = scaled(target, 1.0 / target_scale);
    const double target_norm = frob_norm(scaled_target);

    // Basis batch: row j is e_j, so the circuit output row j is operator column j.
    DenseTensor basis(d, shape);
    for (std::size_t j = 0; j < d; ++j) basis.data[j * d + j] = 1.0;

    double best_residual = std::numeric_limits<double>::infinity();
    const std::size_t warm =
        static_cast<std::size_t>(options.warmup_fraction * static_cast<double>(options.steps));

    for (std::size_t r = 0; r < restarts; ++r) {
        const double gf = options.gaussian_restart_fraction;
        const bool gaussian_init =
            std::floor(static_cast<double>(r + 1) * gf) > std::floor(static_cast<double>(r) * gf);
        QuantaPlan plan =
            gaussian_init
                ? build_all_pairs_plan(shape, detail::mix_seed(seed, r), 1.0, rounds)
                : detail::near_identity_plan(shape, rounds, detail::mix_seed(seed, r),
                                             options.init_noise);
        std::vector<double> params = flatten_params(plan);
        AdamState adam(params.size());
        double restart_best = std::numeric_limits<double>::infinity();
        std::vector<double> restart_best_params = params;

        auto residual_of = [&](const std::vector<DenseTensor>& fwd) {
            const DenseTensor& cols = fwd.back();  // row j = column j of M
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t i = 0; i < d; ++i) {
                    const double diff = cols.data[j * d + i] - scaled_target.data[i * d + j];
                    sq += diff * diff;
                }
            return std::sqrt(sq) / target_norm;
        };
        auto note = [&](double residual) {
            if (residual < restart_best) {
                restart_best = residual;
                restart_best_params = params;
            }
        };

        // Phase 1: adaptive-moment descent from the restart's init.
        for (std::size_t t = 0; t < options.steps; ++t) {
            set_params(plan, params);
            const std::vector<DenseTensor> fwd = forward_partials(plan, basis);
            const double residual = residual_of(fwd);
            if (!std::isfinite(residual)) break;
            note(residual);
            if (options.stop_below > 0.0 && residual < options.stop_below) break;

            DenseTensor upstream(d, plan.out_shape);
            const double scale = 2.0 / (target_norm * target_norm);
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t i = 0; i < d; ++i)
                    upstream.data[j * d + i] =
                        scale * (fwd.back().data[j * d + i] - scaled_target.data[i * d + j]);
            const std::vector<Matrix> grads = grad_from_partials(plan, fwd, upstream);
            const double lr =
                t < warm ? options.lr_start
                         : options.lr_start *
                               std::pow(options.lr_end / options.lr_start,
                                        static_cast<double>(t - warm) /
                                            static_cast<double>(options.steps - warm));
            adam.step(params, flatten_grads(grads), lr);
        }

        // Phase 2: damped Gauss-Newton on the same residual; the ill-conditioned
        // tail that first-order steps crawl through collapses in a few solves.
        if (options.polish_iters > 0 &&
            (options.stop_below <= 0.0 || restart_best >= options.stop_below)) {
            params = restart_best_params;
            double lambda = 1e-4;
            std::size_t kicks_left = options.stall_kicks;
            std::mt19937_64 kick_rng(detail::mix_seed(seed, 0x1c1c + r));
            for (std::size_t it = 0; it < options.polish_iters; ++it) {
                set_params(plan, params);
                const std::vector<DenseTensor> fwd = forward_partials(plan, basis);
                const double residual = residual_of(fwd);
                if (!std::isfinite(residual)) break;
                note(residual);
                if (options.stop_below > 0.0 && residual < options.stop_below) break;
                if (lambda > 1e12) break;

                const Matrix jac = detail::operator_jacobian(plan, fwd);
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>
                    ej(jac.data.data(), static_cast<Eigen::Index>(jac.rows),
                       static_cast<Eigen::Index>(jac.cols));
                Eigen::VectorXd res(static_cast<Eigen::Index>(d * d));
                for (std::size_t i = 0; i < d; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        res(static_cast<Eigen::Index>(i * d + j)) =
                            fwd.back().data[j * d + i] - scaled_target.data[i * d + j];
                // Damped min-norm step via the SVD of J itself; forming J^T J
                // would square the conditioning and stall the tail.
                const Eigen::BDCSVD<Eigen::MatrixXd> jsvd(
                    ej, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const Eigen::VectorXd utr = jsvd.matrixU().transpose() * res;
                bool accepted = false;
                for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
                    Eigen::VectorXd coeff(jsvd.singularValues().size());
                    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
                        const double s = jsvd.singularValues()(k);
                        coeff(k) = -s * utr(k) / (s * s + lambda);
                    }
                    const Eigen::VectorXd delta = jsvd.matrixV() * coeff;
                    std::vector<double> trial = params;
                    for (std::size_t p = 0; p < trial.size(); ++p)
                        trial[p] += delta(static_cast<Eigen::Index>(p));
                    set_params(plan, trial);
                    const double trial_residual = residual_of(forward_partials(plan, basis));
                    if (std::isfinite(trial_residual) && trial_residual < residual) {
                        params = trial;
                        lambda = std::max(lambda / 3.0, 1e-14);
                        accepted = true;
                    } else {
                        lambda *= 8.0;
                    }
                }
                if (!accepted) {
                    // Stalled: the leftover residual points where the current
                    // iterate's Jacobian is near-singular. Kick off the
                    // manifold with escalating magnitude and keep refining
                    // from the best point so far.
                    if (kicks_left == 0) break;
                    --kicks_left;
                    const std::size_t kick_index = options.stall_kicks - kicks_left;
                    params = restart_best_params;
                    double rms = 0.0;
                    for (double p : params) rms += p * p;
                    rms = std::sqrt(rms / static_cast<double>(params.size()));
                    const double mag = std::min(
                        0.5, options.kick_scale * std::pow(1.5, static_cast<double>(kick_index)));
                    std::normal_distribution<double> noise(0.0, mag * rms);
                    for (double& p : params) p += noise(kick_rng);
                    lambda = 1e-4;
                }
            }
            set_params(plan, params);
            const double final_residual = residual_of(forward_partials(plan, basis));
            if (std::isfinite(final_residual)) note(final_residual);
        }

        result.residual_per_restart.push_back(restart_best);
        if (restart_best < best_residual) {
            best_residual = restart_best;
            set_params(plan, restart_best_params);
            result.plan = plan;
            result.best_restart = r;
        }
        if (options.stop_below > 0.0 && best_residual < options.stop_below) break;
    }
    detail::scale_gates(result.plan,
                        std::pow(target_scale, 1.0 / static_cast<double>(result.plan.gates.size())));
    if (!std::isfinite(best_residual))
        throw NumericalError("fit diverged on every restart");
    result.residual = best_residual;
    return result;
}

}  // namespace quanta
