// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "quanta/adapted_linear.hpp"
#include "quanta/error.hpp"
#include "quanta/grad.hpp"
#include "quanta/lora.hpp"
#include "quanta/matrix.hpp"
#include "quanta/optimizer.hpp"
#include "quanta/plan.hpp"
#include "quanta/seeding.hpp"

namespace quanta {

/// A controlled-rank recovery problem: learn the update delta_star on top of a
/// frozen base map, observed only through input/output pairs.
struct SyntheticTask {
    Matrix w0;
    Matrix delta_star;
    std::size_t rank_of_delta = 0;  // 0 = full-rank Gaussian target
    std::size_t dim = 0;
    std::size_t batch_size = 0;
    std::uint64_t seed = 0;
};

inline SyntheticTask make_synthetic_task(std::size_t dim, std::size_t rank,
                                         std::size_t batch_size, std::uint64_t seed) {
    if (dim == 0 || batch_size == 0) throw DimensionError("task needs dim and batch_size >= 1");
    if (rank > dim) throw DimensionError("target rank exceeds the dimension");
    SyntheticTask task;
    task.dim = dim;
    task.rank_of_delta = rank;
    task.batch_size = batch_size;
    task.seed = seed;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double s = 1.0 / std::sqrt(static_cast<double>(dim));
    task.w0 = Matrix(dim, dim);
    for (double& v : task.w0.data) v = s * unit(rng);
    task.delta_star = Matrix(dim, dim);
    if (rank == 0) {
        for (double& v : task.delta_star.data) v = s * unit(rng);
    } else {
        // Sum of `rank` random outer products; numerical rank equals `rank`.
        const double os = 1.0 / std::sqrt(static_cast<double>(dim * rank));
        for (std::size_t k = 0; k < rank; ++k) {
            std::vector<double> u(dim), v(dim);
            for (double& e : u) e = unit(rng);
            for (double& e : v) e = unit(rng);
            for (std::size_t i = 0; i < dim; ++i)
                for (std::size_t j = 0; j < dim; ++j)
                    task.delta_star.data[i * dim + j] += os * u[i] * v[j];
        }
    }
    return task;
}

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-2;
    std::size_t steps = 2000;
    std::size_t batch_size = 0;  // 0 = task batch size
    std::uint64_t seed = 1;
    std::size_t record_every = 1;
};

enum class AdapterKind { quanta, lora };

struct AdapterSpec {
    AdapterKind kind = AdapterKind::quanta;
    AxisShape shape;            // quanta: axis factorization of the task dim
    std::size_t rounds = 1;     // quanta: stacked all-pairs repetitions
    double init_scale = 1.0;
    std::size_t lora_rank = 4;  // lora
    double alpha = 16.0;        // lora
};

struct TrainReport {
    std::vector<std::size_t> loss_steps;
    std::vector<double> loss_curve;
    double final_loss = 0.0;
    double final_recovery_error = 0.0;
    double wall_clock_seconds = 0.0;
    std::size_t param_count = 0;
    bool diverged = false;
};

/// Trains the chosen adapter against the task's function-space MSE,
/// loss = mean over batch and outputs of ((W0 + delta_star) x - forward(x))^2,
/// then reports || merged delta - delta_star ||_F / || delta_star ||_F.
/// Deterministic for a fixed seed. On divergence the report carries the curve
/// up to the failing step with the diverged flag set.
inline TrainReport run_recovery(const SyntheticTask& task, const AdapterSpec& adapter,
                                const TrainConfig& config) {
    if (config.steps == 0) throw DimensionError("training needs steps >= 1");
    if (config.learning_rate <= 0.0) throw DimensionError("learning rate must be positive");
    const std::size_t d = task.dim;
    const std::size_t batch = config.batch_size ? config.batch_size : task.batch_size;
    const Matrix target_map = add(task.w0, task.delta_star);

    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    TrainReport report;

    // Adapter state. The quanta path trains the plan of an offset-merged
    // layer; the lora path trains A/B directly on top of w0.
    AdaptedLinear layer;
    LoraAdapter lora;
    std::vector<double> params;
    if (adapter.kind == AdapterKind::quanta) {
        if (adapter.shape.total() != d)
            throw DimensionError("adapter shape " + adapter.shape.str() +
                                 " does not factor the task dimension " + std::to_string(d));
        QuantaPlan plan = build_all_pairs_plan(adapter.shape, detail::mix_seed(config.seed, 1),
                                               adapter.init_scale, adapter.rounds);
        layer = make_adapted_linear(task.w0, plan, true);
        params = flatten_params(layer.plan);
    } else {
        lora = make_lora(d, d, adapter.lora_rank, detail::mix_seed(config.seed, 2), adapter.alpha);
        params.resize(lora.a.data.size() + lora.b.data.size());
        std::copy(lora.a.data.begin(), lora.a.data.end(), params.begin());
        std::copy(lora.b.data.begin(), lora.b.data.end(), params.begin() + lora.a.data.size());
    }
    report.param_count = params.size();
    AdamState adam(params.size());

    std::vector<double> grad(params.size(), 0.0);
    for (std::size_t step = 0; step < config.steps; ++step) {
        // Fresh Gaussian batch each step, rows are samples.
        std::vector<double> x(batch * d);
        for (double& v : x) v = unit(rng);

        std::vector<double> target(batch * d);
        for (std::size_t b = 0; b < batch; ++b) {
            const std::vector<double> row(x.begin() + b * d, x.begin() + (b + 1) * d);
            const std::vector<double> y = matvec(target_map, row);
            std::copy(y.begin(), y.end(), target.begin() + b * d);
        }

        std::vector<double> pred;
        if (adapter.kind == AdapterKind::quanta) {
            set_params(layer.plan, params);
            pred = forward(layer, x);
        } else {
            std::copy(params.begin(), params.begin() + lora.a.data.size(), lora.a.data.begin());
            std::copy(params.begin() + lora.a.data.size(), params.end(), lora.b.data.begin());
            pred.resize(batch * d);
            const std::vector<double> delta = lora_apply(lora, x);
            for (std::size_t b = 0; b < batch; ++b) {
                const std::vector<double> row(x.begin() + b * d, x.begin() + (b + 1) * d);
                const std::vector<double> base = matvec(task.w0, row);
                for (std::size_t i = 0; i < d; ++i)
                    pred[b * d + i] = base[i] + delta[b * d + i];
            }
        }

        double loss = 0.0;
        std::vector<double> up(batch * d);
        const double scale = 2.0 / static_cast<double>(batch * d);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double diff = pred[i] - target[i];
            loss += diff * diff;
            up[i] = scale * diff;
        }
        loss /= static_cast<double>(batch * d);

        if (step % config.record_every == 0 || step + 1 == config.steps) {
            report.loss_steps.push_back(step);
            report.loss_curve.push_back(loss);
        }
        if (!std::isfinite(loss)) {
            report.diverged = true;
            report.final_loss = loss;
            break;
        }
        report.final_loss = loss;

        if (adapter.kind == AdapterKind::quanta) {
            const DenseTensor xt(batch, layer.plan.in_shape, x);
            const DenseTensor ut(batch, layer.plan.out_shape, up);
            grad = flatten_grads(grad_plan(layer.plan, xt, ut));
        } else {
            // dB = s * U^T X A^T per sample, dA = s * B^T U x^T; accumulated.
            const double s = lora.scale();
            std::fill(grad.begin(), grad.end(), 0.0);
            double* ga = grad.data();
            double* gb = grad.data() + lora.a.data.size();
            const std::size_t r = lora.rank;
            for (std::size_t b = 0; b < batch; ++b) {
                const std::vector<double> row(x.begin() + b * d, x.begin() + (b + 1) * d);
                const std::vector<double> ax = matvec(lora.a, row);
                std::vector<double> btu(r, 0.0);
                for (std::size_t i = 0; i < d; ++i) {
                    const double u = up[b * d + i];
                    if (u == 0.0) continue;
                    const double* brow = lora.b.data.data() + i * r;
                    for (std::size_t k = 0; k < r; ++k) {
                        btu[k] += brow[k] * u;
                        gb[i * r + k] += s * u * ax[k];
                    }
                }
                for (std::size_t k = 0; k < r; ++k) {
                    const double c = s * btu[k];
                    if (c == 0.0) continue;
                    for (std::size_t j = 0; j < d; ++j) ga[k * d + j] += c * row[j];
                }
            }
        }

        if (config.optimizer == OptimizerKind::adam)
            adam.step(params, grad, config.learning_rate);
        else
            gradient_descent_step(params, grad, config.learning_rate);
    }

    // Recovered update relative to the original base map.
    Matrix delta_hat;
    if (adapter.kind == AdapterKind::quanta) {
        set_params(layer.plan, params);
        delta_hat = sub(merge(layer), task.w0);
    } else {
        std::copy(params.begin(), params.begin() + lora.a.data.size(), lora.a.data.begin());
        std::copy(params.begin() + lora.a.data.size(), params.end(), lora.b.data.begin());
        delta_hat = lora_delta(lora);
    }
    report.final_recovery_error =
        frob_norm(sub(delta_hat, task.delta_star)) / frob_norm(task.delta_star);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace quanta
