// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "quanta/error.hpp"
#include "quanta/experiment_config.hpp"
#include "quanta/model_config.hpp"
#include "quanta/qtf.hpp"
#include "quanta/rank.hpp"
#include "quanta/recovery.hpp"
#include "quanta/similarity.hpp"
#include "quanta/universality.hpp"

// Command-line surface. Every command is deterministic given its input files
// and seeds. Exit codes: 0 success, 2 validation failure, 3 numerical failure.

namespace quanta::cli {

namespace detail {

inline QuantaPlan expect_plan(const std::string& path) {
    const auto records = read_qtf(path);
    if (records.empty() || !std::holds_alternative<QuantaPlan>(records.front()))
        throw IoError(path + ": expected a gate-plan record");
    return std::get<QuantaPlan>(records.front());
}

inline Matrix expect_matrix(const std::string& path) {
    const auto records = read_qtf(path);
    if (records.empty() || !std::holds_alternative<Matrix>(records.front()))
        throw IoError(path + ": expected a dense-matrix record");
    return std::get<Matrix>(records.front());
}

inline AxisShape parse_shape(const std::string& csv) {
    std::vector<std::size_t> dims;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) dims.push_back(std::stoull(item));
    return AxisShape(dims);
}

inline nlohmann::json rank_json(const RankReport& report) {
    nlohmann::json j;
    j["rank"] = report.numerical_rank;
    j["tolerance"] = report.tolerance;
    j["threshold"] = report.threshold;
    if (report.has_bounds) {
        j["lower_bound"] = report.lower_bound;
        j["upper_bound"] = report.upper_bound;
        j["tolerance_sensitive"] = report.tolerance_sensitive;
    }
    j["singular_values"] = report.singular_values;
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << text;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

/// Runs one command line (without the program name). Returns the exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"axis-factored tensor-circuit adapters"};
    app.require_subcommand(1);

    // gen-expr
    auto* gen = app.add_subcommand("gen-expr", "print the contraction expression for n axes");
    std::size_t gen_n = 0;
    bool gen_operator = false;
    gen->add_option("--n", gen_n, "axis count")->required();
    gen->add_flag("--operator", gen_operator, "operator form instead of the apply form");

    // build-plan
    auto* bplan = app.add_subcommand("build-plan", "create a random all-pairs gate plan");
    std::string bp_shape, bp_out;
    std::uint64_t bp_seed = 1;
    double bp_scale = 1.0;
    std::size_t bp_rounds = 1;
    bplan->add_option("--shape", bp_shape, "axis extents, e.g. 16,8,8,4")->required();
    bplan->add_option("--seed", bp_seed, "rng seed");
    bplan->add_option("--init-scale", bp_scale, "gaussian init scale");
    bplan->add_option("--rounds", bp_rounds, "stacked all-pairs repetitions");
    bplan->add_option("--out", bp_out, "output .qtf")->required();

    // build-lora
    auto* blora = app.add_subcommand("build-lora", "create a low-rank adapter record");
    std::size_t bl_out_dim = 0, bl_in_dim = 0, bl_rank = 0;
    std::uint64_t bl_seed = 1;
    double bl_alpha = 16.0;
    std::string bl_out;
    blora->add_option("--out-dim", bl_out_dim)->required();
    blora->add_option("--in-dim", bl_in_dim)->required();
    blora->add_option("--r", bl_rank)->required();
    blora->add_option("--seed", bl_seed);
    blora->add_option("--alpha", bl_alpha);
    blora->add_option("--out", bl_out, "output .qtf")->required();

    // materialize
    auto* mat = app.add_subcommand("materialize", "plan -> dense matrix");
    std::string mat_plan, mat_out;
    mat->add_option("--plan", mat_plan)->required();
    mat->add_option("--out", mat_out)->required();

    // merge
    auto* mrg = app.add_subcommand("merge", "base + materialized adapter -> matrix");
    std::string mrg_base, mrg_plan, mrg_out;
    mrg->add_option("--base", mrg_base)->required();
    mrg->add_option("--plan", mrg_plan, "plan or adapter .qtf")->required();
    mrg->add_option("--out", mrg_out)->required();

    // rank
    auto* rnk = app.add_subcommand("rank", "numerical rank, with circuit bounds for plans");
    std::string rnk_matrix, rnk_plan, rnk_json_path;
    double rnk_tol = 0.0;
    rnk->add_option("--matrix", rnk_matrix);
    rnk->add_option("--plan", rnk_plan);
    rnk->add_option("--tol", rnk_tol, "relative tolerance (0 = machine eps)");
    rnk->add_option("--json", rnk_json_path, "also write the report here");

    // subspace
    auto* sub = app.add_subcommand("subspace", "right-singular subspace similarity grid");
    std::string sub_w1, sub_w2, sub_csv;
    std::size_t sub_max_i = 0, sub_max_j = 0;
    sub->add_option("--w1", sub_w1)->required();
    sub->add_option("--w2", sub_w2)->required();
    sub->add_option("--max-i", sub_max_i)->required();
    sub->add_option("--max-j", sub_max_j)->required();
    sub->add_option("--csv", sub_csv)->required();

    // count
    auto* cnt = app.add_subcommand("count", "trainable-parameter fraction for a model config");
    std::string cnt_plan, cnt_model;
    cnt->add_option("--plan", cnt_plan, "plan or adapter .qtf")->required();
    cnt->add_option("--model", cnt_model, "model .cfg")->required();

    // train
    auto* trn = app.add_subcommand("train", "run a recovery experiment from a config file");
    std::string trn_config;
    trn->add_option("--config", trn_config)->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit a stacked circuit to a dense target");
    std::string fit_target, fit_shape, fit_out, fit_json_path;
    std::size_t fit_rounds = 3, fit_restarts = 8, fit_steps = 4000;
    std::uint64_t fit_seed = 1;
    double fit_stop = 0.0;
    fit->add_option("--target", fit_target)->required();
    fit->add_option("--shape", fit_shape)->required();
    fit->add_option("--rounds", fit_rounds);
    fit->add_option("--restarts", fit_restarts);
    fit->add_option("--steps", fit_steps);
    fit->add_option("--seed", fit_seed);
    fit->add_option("--stop-below", fit_stop, "early-stop residual");
    fit->add_option("--out", fit_out, "write the fitted plan here");
    fit->add_option("--json", fit_json_path, "write the summary here");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed()) {
            const EinsumExpr expr = gen_operator ? gen_operator_expr(gen_n) : gen_apply_expr(gen_n);
            out << expr.text << "\n";
        } else if (bplan->parsed()) {
            const QuantaPlan plan =
                build_all_pairs_plan(detail::parse_shape(bp_shape), bp_seed, bp_scale, bp_rounds);
            write_qtf(bp_out, {plan});
            out << "plan " << plan.in_shape.str() << " gates=" << plan.gates.size()
                << " params=" << plan_param_count(plan) << " -> " << bp_out << "\n";
        } else if (blora->parsed()) {
            const LoraAdapter adapter = make_lora(bl_out_dim, bl_in_dim, bl_rank, bl_seed, bl_alpha);
            write_qtf(bl_out, {adapter});
            out << "lora r=" << bl_rank << " params="
                << lora_param_count(bl_rank, bl_in_dim, bl_out_dim) << " -> " << bl_out << "\n";
        } else if (mat->parsed()) {
            const Matrix m = materialize(detail::expect_plan(mat_plan));
            write_qtf(mat_out, {m});
            out << "matrix " << m.rows << "x" << m.cols << " -> " << mat_out << "\n";
        } else if (mrg->parsed()) {
            const Matrix base = detail::expect_matrix(mrg_base);
            const auto records = read_qtf(mrg_plan);
            if (records.empty()) throw IoError(mrg_plan + ": empty file");
            Matrix delta;
            if (const auto* plan = std::get_if<QuantaPlan>(&records.front()))
                delta = materialize(*plan);
            else if (const auto* lora = std::get_if<LoraAdapter>(&records.front()))
                delta = lora_delta(*lora);
            else
                throw IoError(mrg_plan + ": expected a plan or adapter record");
            const Matrix merged = add(base, delta);
            write_qtf(mrg_out, {merged});
            out << "merged " << merged.rows << "x" << merged.cols << " -> " << mrg_out << "\n";
        } else if (rnk->parsed()) {
            if (rnk_matrix.empty() == rnk_plan.empty())
                throw IoError("rank: pass exactly one of --matrix or --plan");
            RankReport report;
            if (!rnk_plan.empty())
                report = theorem2_bounds(detail::expect_plan(rnk_plan), rnk_tol);
            else
                report = numerical_rank(detail::expect_matrix(rnk_matrix), rnk_tol);
            const nlohmann::json j = detail::rank_json(report);
            out << "R = " << report.numerical_rank;
            if (report.has_bounds)
                out << " bounds [" << report.lower_bound << ", " << report.upper_bound << "]"
                    << (report.tolerance_sensitive ? " (tolerance-sensitive)" : "");
            out << "\n" << j.dump(2) << "\n";
            if (!rnk_json_path.empty()) detail::write_text(rnk_json_path, j.dump(2) + "\n");
        } else if (sub->parsed()) {
            const SimilarityGrid grid = subspace_similarity(
                detail::expect_matrix(sub_w1), detail::expect_matrix(sub_w2), sub_max_i, sub_max_j);
            std::ostringstream csv;
            csv << "i,j,phi\n";
            csv << std::setprecision(17);
            for (std::size_t i = 1; i <= grid.max_i; ++i)
                for (std::size_t j = i; j <= grid.max_j; ++j)
                    csv << i << "," << j << "," << grid.at(i, j) << "\n";
            detail::write_text(sub_csv, csv.str());
            out << "grid " << grid.max_i << "x" << grid.max_j << " (r1=" << grid.r1
                << ", r2=" << grid.r2 << (grid.truncated ? ", truncated" : "") << ") -> "
                << sub_csv << "\n";
            if (grid.truncated)
                err << "warning: requested indices exceed the numerical rank; grid truncated\n";
        } else if (cnt->parsed()) {
            const ModelConfig model = load_model_config(cnt_model);
            const auto records = read_qtf(cnt_plan);
            if (records.empty()) throw IoError(cnt_plan + ": empty file");
            double percent = 0.0;
            std::uint64_t per_matrix = 0;
            if (const auto* plan = std::get_if<QuantaPlan>(&records.front())) {
                percent = param_fraction(*plan, model);
                per_matrix = cost(*plan).trainable_params;
            } else if (const auto* lora = std::get_if<LoraAdapter>(&records.front())) {
                percent = param_fraction_lora(lora->rank, model);
                per_matrix = lora_param_count(lora->rank, lora->a.cols, lora->b.rows);
            } else {
                throw IoError(cnt_plan + ": expected a plan or adapter record");
            }
            out << "params_per_matrix = " << per_matrix << "\n";
            out << "adapted_matrices = " << model.modules.size() * model.num_layers << "\n";
            out << "total_base_params = " << model.total_base_params << "\n";
            out << "fraction = " << std::fixed << std::setprecision(3) << percent << "%\n";
            out.unsetf(std::ios::fixed);
        } else if (trn->parsed()) {
            const ExperimentConfig exp = load_experiment_config(trn_config);
            const SyntheticTask task = make_synthetic_task(
                exp.task_dim, exp.task_rank, exp.task_batch, quanta::detail::mix_seed(exp.seed, 0x7a5c));
            const TrainReport report = run_recovery(task, exp.adapter, exp.train);

            if (!exp.loss_csv.empty()) {
                std::ostringstream csv;
                csv << "step,loss\n" << std::setprecision(17);
                for (std::size_t i = 0; i < report.loss_steps.size(); ++i)
                    csv << report.loss_steps[i] << "," << report.loss_curve[i] << "\n";
                detail::write_text(exp.loss_csv, csv.str());
            }
            nlohmann::json j;
            j["seed"] = exp.seed;
            j["task"] = {{"dim", exp.task_dim}, {"rank", exp.task_rank}, {"batch", exp.task_batch}};
            j["adapter"] = exp.adapter.kind == AdapterKind::quanta
                               ? nlohmann::json{{"kind", "quanta"},
                                                {"shape", exp.adapter.shape.dims},
                                                {"rounds", exp.adapter.rounds}}
                               : nlohmann::json{{"kind", "lora"}, {"r", exp.adapter.lora_rank}};
            j["param_count"] = report.param_count;
            j["steps"] = exp.train.steps;
            j["final_loss"] = report.final_loss;
            j["final_recovery_error"] = report.final_recovery_error;
            j["wall_clock_seconds"] = report.wall_clock_seconds;
            j["diverged"] = report.diverged;
            if (!exp.summary_json.empty()) detail::write_text(exp.summary_json, j.dump(2) + "\n");
            out << j.dump(2) << "\n";
            if (report.diverged) {
                err << "training diverged (non-finite loss)\n";
                return 3;
            }
        } else if (fit->parsed()) {
            const Matrix target = detail::expect_matrix(fit_target);
            FitOptions options;
            options.steps = fit_steps;
            options.stop_below = fit_stop;
            const FitResult result = universality_fit(target, detail::parse_shape(fit_shape),
                                                      fit_rounds, fit_restarts, fit_seed, options);
            if (!fit_out.empty()) write_qtf(fit_out, {result.plan});
            nlohmann::json j;
            j["residual"] = result.residual;
            j["best_restart"] = result.best_restart;
            j["within_theorem_regime"] = result.within_theorem_regime;
            j["residual_per_restart"] = result.residual_per_restart;
            if (!fit_json_path.empty()) detail::write_text(fit_json_path, j.dump(2) + "\n");
            out << j.dump(2) << "\n";
        }
        return 0;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace quanta::cli
