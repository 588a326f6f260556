#include "mmvb/runner/train.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "mmvb/core/adam.hpp"
#include "mmvb/core/error.hpp"
#include "mmvb/core/serialize.hpp"
#include "mmvb/runner/loader.hpp"

namespace mmvb::runner {

namespace fs = std::filesystem;
using namespace core;
using namespace models;
using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

MultimodalVae build_model(const ExperimentConfig& cfg, std::size_t axis_value,
                          std::uint64_t init_seed) {
    std::optional<fusion::DmvaeLatentLayout> layout;
    std::size_t latent = axis_value;
    if (cfg.strategy() == Strategy::dmvae) {
        layout = fusion::DmvaeLatentLayout{
            axis_value, {cfg.dmvae_private_dim, cfg.dmvae_private_dim}};
        latent = axis_value;
    }
    return MultimodalVae::build(cfg.strategy(), ModelShapes{}, latent, cfg.image_hidden,
                                cfg.text_hidden, layout, init_seed);
}

json meta_json(const ExperimentConfig& cfg, std::size_t axis_value, std::uint64_t seed) {
    return json{
        {"kind", "mmvb-checkpoint"},
        {"strategy", cfg.model},
        {"level", cfg.level},
        {"axis_value", axis_value},
        {"dmvae_private_dim", cfg.dmvae_private_dim},
        {"image_hidden", cfg.image_hidden},
        {"text_hidden", cfg.text_hidden},
        {"seed", seed},
        {"beta", cfg.beta},
        {"subsample_unimodal", cfg.subsample_unimodal},
        {"likelihood_weight_image", cfg.likelihood_weight_image},
        {"likelihood_weight_text", cfg.likelihood_weight_text},
    };
}

void save_checkpoint(const MultimodalVae& model, const json& meta,
                     const std::string& path) {
    save_params(path, model.params());
    std::ofstream out(path + ".meta.json", std::ios::trunc);
    out << meta.dump(2) << "\n";
    if (!out) throw io_error("cannot write checkpoint metadata: " + path);
}

}  // namespace

std::string run_dir_name(const ExperimentConfig& cfg, std::size_t axis_value,
                         std::uint64_t seed) {
    std::string cell = cfg.model + "_level" + std::to_string(cfg.level);
    cell += cfg.strategy() == Strategy::dmvae
                ? "_shared" + std::to_string(axis_value)
                : "_latent" + std::to_string(axis_value);
    return cell + "/seed" + std::to_string(seed);
}

RunLog train(const ExperimentConfig& cfg, std::size_t axis_value, std::uint64_t seed,
             const std::string& run_dir) {
    cfg.validate();
    RunLog log;
    log.run_dir = run_dir;
    fs::create_directories(run_dir);

    DatasetLoader loader(cdsprites::level_dir_path(cfg.dataset_dir, cfg.level), "train",
                         cfg.batch_size);
    if (loader.level() != cfg.level)
        throw contract_error("dataset level does not match config level");

    MultimodalVae model = build_model(cfg, axis_value, derive_seed(seed, 11));
    Adam adam(model.params(), {.learning_rate = cfg.learning_rate});
    ObjectiveConfig ocfg;
    ocfg.beta = cfg.beta;
    ocfg.likelihood_weights = {cfg.likelihood_weight_image, cfg.likelihood_weight_text};
    ocfg.subsample_unimodal = cfg.subsample_unimodal;
    ocfg.importance_samples = std::max<std::size_t>(1, cfg.eval_importance_samples);

    Rng noise_rng(derive_seed(seed, 12));
    const json meta = meta_json(cfg, axis_value, seed);

    std::ofstream loss_csv(fs::path(run_dir) / "loss.csv", std::ios::trunc);
    loss_csv << "epoch,term,value\n";
    std::ofstream train_log(fs::path(run_dir) / "train.log", std::ios::trunc);

    const std::size_t epochs = cfg.epochs_effective();
    const std::size_t steps_per_epoch = loader.batches_per_epoch();
    if (steps_per_epoch == 0) throw contract_error("train split smaller than one batch");

    std::string last_good_checkpoint;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t epoch = 1; epoch <= epochs && !log.failed; ++epoch) {
        loader.begin_epoch(derive_seed(seed, 13, epoch));
        std::map<std::string, double> epoch_terms;
        double epoch_total = 0.0;
        for (std::size_t step = 0; step < steps_per_epoch; ++step) {
            auto batch = loader.batch(step);
            model.params().zero_grad();
            LossReport report;
            try {
                report = objective(model, batch, ocfg, noise_rng);
                if (!std::isfinite(report.total))
                    throw numeric_error("non-finite loss " + fmt_double(report.total));
                report.loss.backward();
                adam.step(model.params());
            } catch (const numeric_error& ex) {
                log.failed = true;
                log.failure = "epoch " + std::to_string(epoch) + " step " +
                              std::to_string(step) + ": " + ex.what();
                break;
            }
            epoch_total += report.total;
            for (const auto& t : report.terms) epoch_terms[t.name] += t.value;
        }
        if (log.failed) break;

        for (auto& [name, sum] : epoch_terms)
            loss_csv << epoch << "," << name << ","
                     << fmt_double(sum / static_cast<double>(steps_per_epoch)) << "\n";
        const double mean_total = epoch_total / static_cast<double>(steps_per_epoch);
        if (epoch == 1) log.first_epoch_loss = mean_total;
        log.final_epoch_loss = mean_total;
        log.epochs_run = epoch;
        train_log << "epoch " << epoch << " loss " << mean_total << " ("
                  << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                         .count()
                  << "s)\n"
                  << std::flush;

        if (cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0 &&
            epoch != epochs) {
            const auto path =
                (fs::path(run_dir) / ("checkpoint_ep" + std::to_string(epoch) + ".mmvb"))
                    .string();
            save_checkpoint(model, meta, path);
            last_good_checkpoint = path;
        }
    }

    if (!log.failed) {
        log.final_checkpoint = (fs::path(run_dir) / "checkpoint_final.mmvb").string();
        save_checkpoint(model, meta, log.final_checkpoint);
    } else {
        log.final_checkpoint = last_good_checkpoint;  // may be empty
    }

    json run = {
        {"status", log.failed ? "failed" : "ok"},
        {"failure", log.failure},
        {"seed", seed},
        {"axis_value", axis_value},
        {"epochs_run", log.epochs_run},
        {"first_epoch_loss", log.first_epoch_loss},
        {"final_epoch_loss", log.final_epoch_loss},
        {"final_checkpoint",
         log.final_checkpoint.empty() ? json(nullptr)
                                      : json(fs::path(log.final_checkpoint).filename())},
        {"config",
         {{"model", cfg.model},
          {"level", cfg.level},
          {"batch_size", cfg.batch_size},
          {"epochs", epochs},
          {"learning_rate", cfg.learning_rate},
          {"beta", cfg.beta},
          {"image_hidden", cfg.image_hidden},
          {"text_hidden", cfg.text_hidden}}},
    };
    std::ofstream run_json(fs::path(run_dir) / "run.json", std::ios::trunc);
    run_json << run.dump(2) << "\n";
    if (!run_json) throw io_error("cannot write run.json under " + run_dir);
    return log;
}

MultimodalVae load_checkpoint(const std::string& checkpoint_path) {
    std::ifstream meta_in(checkpoint_path + ".meta.json");
    if (!meta_in)
        throw io_error("missing checkpoint metadata: " + checkpoint_path + ".meta.json");
    json meta = json::parse(meta_in);
    if (meta.value("kind", "") != "mmvb-checkpoint")
        throw io_error("not a checkpoint metadata file: " + checkpoint_path);

    ExperimentConfig cfg;
    cfg.model = meta.at("strategy").get<std::string>();
    cfg.level = meta.at("level").get<int>();
    cfg.dmvae_private_dim = meta.at("dmvae_private_dim").get<std::size_t>();
    cfg.image_hidden = meta.at("image_hidden").get<std::size_t>();
    cfg.text_hidden = meta.at("text_hidden").get<std::size_t>();
    cfg.dataset_dir = "-";  // not needed for rebuilding
    const auto axis_value = meta.at("axis_value").get<std::size_t>();
    MultimodalVae model =
        build_model(cfg, axis_value, derive_seed(meta.at("seed").get<std::uint64_t>(), 11));
    load_params(checkpoint_path, model.params());
    return model;
}

int checkpoint_level(const std::string& checkpoint_path) {
    std::ifstream meta_in(checkpoint_path + ".meta.json");
    if (!meta_in)
        throw io_error("missing checkpoint metadata: " + checkpoint_path + ".meta.json");
    json meta = json::parse(meta_in);
    return meta.at("level").get<int>();
}

}  // namespace mmvb::runner
