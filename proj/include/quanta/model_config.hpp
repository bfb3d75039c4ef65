// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "quanta/config_reader.hpp"
#include "quanta/error.hpp"
#include "quanta/lora.hpp"
#include "quanta/plan.hpp"

namespace quanta {

struct AdaptedModule {
    std::string name;
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
};

/// Base-model accounting data used only for trainable-fraction cross-checks.
struct ModelConfig {
    std::string name;
    std::size_t num_layers = 0;
    std::size_t hidden_dim = 0;
    std::vector<AdaptedModule> modules;  // adapted matrices per layer
    std::uint64_t total_base_params = 0;
};

/// Keys: name, num_layers, hidden_dim, total_base_params,
/// modules = q_proj:4096x4096, v_proj:4096x4096
inline ModelConfig load_model_config(const std::string& path) {
    ConfigReader cfg = ConfigReader::from_file(path);
    ModelConfig model;
    model.name = cfg.get_string_or("name", path);
    model.num_layers = cfg.get_u64("num_layers");
    model.hidden_dim = cfg.get_u64("hidden_dim");
    model.total_base_params = cfg.get_u64("total_base_params");
    const std::string modules = cfg.get_string("modules");
    std::istringstream in(modules);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto colon = item.find(':');
        const auto x = item.find('x', colon == std::string::npos ? 0 : colon);
        if (colon == std::string::npos || x == std::string::npos)
            throw IoError(path + ": module entry needs the form name:OUTxIN, got '" + item + "'");
        auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        AdaptedModule mod;
        mod.name = strip(item.substr(0, colon));
        mod.out_dim = std::stoull(item.substr(colon + 1, x - colon - 1));
        mod.in_dim = std::stoull(item.substr(x + 1));
        if (mod.name.empty() || mod.out_dim == 0 || mod.in_dim == 0)
            throw IoError(path + ": bad module entry '" + item + "'");
        model.modules.push_back(mod);
    }
    if (model.modules.empty()) throw IoError(path + ": no adapted modules listed");
    if (model.total_base_params == 0) throw IoError(path + ": total_base_params must be > 0");
    cfg.check_all_consumed();
    return model;
}

/// Percentage of base parameters made trainable when the plan adapts every
/// listed module in every layer.
inline double param_fraction(const QuantaPlan& plan, const ModelConfig& model) {
    const ComplexityReport report = cost(plan);
    std::uint64_t total = 0;
    for (const AdaptedModule& mod : model.modules) {
        if (plan.external_out_len() != mod.out_dim || plan.external_in_len() != mod.in_dim)
            throw DimensionError("plan extent does not match adapted module " + mod.name);
        total += report.trainable_params;
    }
    total *= model.num_layers;
    return 100.0 * static_cast<double>(total) / static_cast<double>(model.total_base_params);
}

/// Same accounting for the low-rank baseline: r * (in + out) per module.
inline double param_fraction_lora(std::size_t r, const ModelConfig& model) {
    std::uint64_t total = 0;
    for (const AdaptedModule& mod : model.modules)
        total += lora_param_count(r, mod.in_dim, mod.out_dim);
    total *= model.num_layers;
    return 100.0 * static_cast<double>(total) / static_cast<double>(model.total_base_params);
}

}  // namespace quanta
