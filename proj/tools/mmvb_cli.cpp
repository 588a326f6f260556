// mmvb: multimodal VAE benchmark driver.
//
// Subcommands: generate (CdSprites+ data), train, gridsearch, eval, export.
// Output root defaults to $MMVB_OUT_ROOT or ./runs.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mmvb/core/error.hpp"

#include "mmvb/runner/evaluate.hpp"
#include "mmvb/runner/grid.hpp"
#include "mmvb/runner/visualize.hpp"

using namespace mmvb;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"multimodal VAE benchmark"};
    app.require_subcommand(1);

    // ---- generate ----------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "generate a CdSprites+ level");
    int gen_level = 1;
    std::string gen_out = "data";
    std::uint64_t gen_seed = 1;
    std::size_t gen_train = 0, gen_val = 0, gen_test = 0;
    gen->add_option("--level", gen_level, "difficulty level 1..5")->required();
    gen->add_option("--out", gen_out, "output root")->required();
    gen->add_option("--seed", gen_seed, "master seed")->required();
    gen->add_option("--train-count", gen_train, "train samples (default: paper scale)");
    gen->add_option("--val-count", gen_val, "val samples (default: 10% of total)");
    gen->add_option("--test-count", gen_test, "test samples (default 10000)");

    // ---- train / gridsearch -------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "train every seed of one grid cell");
    auto* grid_cmd = app.add_subcommand("gridsearch", "train and evaluate the whole grid");
    std::string cfg_path, out_root = runner::default_output_root();
    for (auto* cmd : {train_cmd, grid_cmd}) {
        cmd->add_option("--config", cfg_path, "experiment config file")->required();
        cmd->add_option("--out", out_root, "output root (default $MMVB_OUT_ROOT or runs)");
    }

    // ---- eval ---------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_dataset, eval_out = "report.json";
    int eval_level = 0;
    std::size_t eval_k = 0, eval_per_dim = 1000, eval_max = 0;
    eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
    eval_cmd->add_option("--dataset", eval_dataset, "dataset root with level_N/")->required();
    eval_cmd->add_option("--level", eval_level)->required();
    eval_cmd->add_option("--out", eval_out, "report path (default report.json)");
    eval_cmd->add_option("--importance-samples", eval_k, "K for log-likelihoods (0 = skip)");
    eval_cmd->add_option("--per-dim", eval_per_dim, "traversal samples per latent dim");
    eval_cmd->add_option("--max-samples", eval_max, "cap on test samples (0 = all)");

    // ---- export -------------------------------------------------------------
    auto* export_cmd = app.add_subcommand("export", "traversal sheets and PCA export");
    std::string exp_ckpt, exp_dataset, exp_out = "export";
    std::size_t exp_cols = 8;
    export_cmd->add_option("--checkpoint", exp_ckpt)->required();
    export_cmd->add_option("--dataset", exp_dataset)->required();
    export_cmd->add_option("--out", exp_out, "output directory (default export/)");
    export_cmd->add_option("--columns", exp_cols, "traversal columns (default 8)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            cdsprites::LevelSpec spec = cdsprites::LevelSpec::paper_defaults(gen_level);
            if (gen_train > 0) {
                spec.train_count = gen_train;
                spec.val_count = 0;  // derive the 10% share unless given
            }
            if (gen_val > 0) spec.val_count = gen_val;
            if (gen_test > 0) spec.test_count = gen_test;
            const auto summary = cdsprites::generate_dataset(spec, gen_out, gen_seed);
            // ship the frozen shape classifier next to the data
            runner::load_or_train_classifier(summary.level_dir);
            std::printf("level %d -> %s: train %zu, val %zu, test %zu (%zu combinations)\n",
                        summary.level, summary.level_dir.c_str(), summary.train_written,
                        summary.val_written, summary.test_written,
                        summary.combination_count);
        } else if (*train_cmd) {
            const auto cfg = runner::parse_config(cfg_path);
            if (cfg.axis_values().size() != 1)
                throw mmvb::config_error(
                    "train runs a single grid cell; use gridsearch for a list-valued "
                    "latent axis");
            for (std::uint64_t seed : cfg.seeds) {
                const std::string run_dir =
                    (fs::path(out_root) /
                     runner::run_dir_name(cfg, cfg.axis_values()[0], seed))
                        .string();
                auto log = runner::train(cfg, cfg.axis_values()[0], seed, run_dir);
                std::printf("seed %llu: %s (%zu epochs, loss %.4f -> %.4f) in %s\n",
                            static_cast<unsigned long long>(seed),
                            log.failed ? "FAILED" : "ok", log.epochs_run,
                            log.first_epoch_loss, log.final_epoch_loss,
                            run_dir.c_str());
                if (log.failed) std::printf("  %s\n", log.failure.c_str());
            }
        } else if (*grid_cmd) {
            const auto cfg = runner::parse_config(cfg_path);
            auto outcome = runner::grid_search(cfg, out_root);
            std::fputs(outcome.summary_table.c_str(), stdout);
            std::printf("summary written to %s/summary.json\n", out_root.c_str());
        } else if (*eval_cmd) {
            runner::EvaluateOptions opt;
            opt.importance_samples = eval_k;
            opt.per_dim_samples = eval_per_dim;
            opt.max_samples = eval_max;
            auto result =
                runner::evaluate_checkpoint(eval_ckpt, eval_dataset, eval_level, opt);
            std::ofstream out(eval_out, std::ios::trunc);
            out << result.to_json().dump(2) << "\n";
            if (!out) throw mmvb::io_error("cannot write report: " + eval_out);
            std::printf("txt2img strict %.1f%%, img2txt strict %.1f%%, joint strict %.1f%% -> %s\n",
                        result.txt2img.strict_pct, result.img2txt.strict_pct,
                        result.joint.strict_pct, eval_out.c_str());
        } else if (*export_cmd) {
            runner::export_visualizations(exp_ckpt, exp_dataset, exp_out, exp_cols);
            std::printf("wrote traversal_grid.png, traversal_captions.txt, latent_pca.csv under %s\n",
                        exp_out.c_str());
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
