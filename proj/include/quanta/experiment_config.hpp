// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "quanta/axis_shape.hpp"
#include "quanta/config_reader.hpp"
#include "quanta/error.hpp"
#include "quanta/recovery.hpp"

namespace quanta {

/// Text description of one recovery experiment: task, adapter, optimizer and
/// output paths. One master seed feeds every random stream. Parsing is strict;
/// unknown keys are errors.
///
///   seed = 7
///   task.dim = 64
///   task.rank = 0              # 0 = full-rank target
///   task.batch = 64
///   adapter.kind = quanta      # quanta | lora
///   adapter.shape = 4,4,4      # quanta only
///   adapter.rounds = 6         # quanta only
///   adapter.init_scale = 1.0   # quanta only
///   adapter.lora_rank = 4      # lora only
///   adapter.alpha = 16         # lora only
///   optim.kind = adam          # adam | gd
///   optim.lr = 0.01
///   optim.steps = 2000
///   optim.record_every = 10
///   out.loss_csv = loss.csv            # optional
///   out.summary_json = summary.json    # optional
///   out.adapter_qtf = adapter.qtf      # optional
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::size_t task_dim = 0;
    std::size_t task_rank = 0;
    std::size_t task_batch = 0;
    AdapterSpec adapter;
    TrainConfig train;
    std::string loss_csv;
    std::string summary_json;
    std::string adapter_qtf;
};

inline ExperimentConfig load_experiment_config(const std::string& path) {
    ConfigReader cfg = ConfigReader::from_file(path);
    ExperimentConfig exp;
    exp.seed = cfg.get_u64("seed");
    exp.task_dim = cfg.get_u64("task.dim");
    exp.task_rank = cfg.get_u64_or("task.rank", 0);
    exp.task_batch = cfg.get_u64("task.batch");

    const std::string kind = cfg.get_string("adapter.kind");
    if (kind == "quanta") {
        exp.adapter.kind = AdapterKind::quanta;
        exp.adapter.shape = AxisShape(cfg.get_size_list("adapter.shape"));
        exp.adapter.rounds = cfg.get_u64_or("adapter.rounds", 1);
        exp.adapter.init_scale = cfg.get_double_or("adapter.init_scale", 1.0);
    } else if (kind == "lora") {
        exp.adapter.kind = AdapterKind::lora;
        exp.adapter.lora_rank = cfg.get_u64("adapter.lora_rank");
        exp.adapter.alpha = cfg.get_double_or("adapter.alpha", 16.0);
    } else {
        throw IoError(path + ": adapter.kind must be quanta or lora, got '" + kind + "'");
    }

    const std::string optim = cfg.get_string_or("optim.kind", "adam");
    if (optim == "adam")
        exp.train.optimizer = OptimizerKind::adam;
    else if (optim == "gd")
        exp.train.optimizer = OptimizerKind::gradient_descent;
    else
        throw IoError(path + ": optim.kind must be adam or gd, got '" + optim + "'");
    exp.train.learning_rate = cfg.get_double_or("optim.lr", 1e-2);
    exp.train.steps = cfg.get_u64("optim.steps");
    exp.train.record_every = cfg.get_u64_or("optim.record_every", 1);
    exp.train.seed = detail::mix_seed(exp.seed, 0x7a11);

    exp.loss_csv = cfg.get_string_or("out.loss_csv", "");
    exp.summary_json = cfg.get_string_or("out.summary_json", "");
    exp.adapter_qtf = cfg.get_string_or("out.adapter_qtf", "");
    cfg.check_all_consumed();
    return exp;
}

}  // namespace quanta
