#include "mmvb/runner/evaluate.hpp"

#include <filesystem>
#include <fstream>

#include "mmvb/core/error.hpp"
#include "mmvb/runner/train.hpp"

namespace mmvb::runner {

namespace fs = std::filesystem;
using namespace eval;
using nlohmann::json;

json EvaluationResult::to_json() const {
    json j = {
        {"level", level},
        {"strategy", strategy},
        {"txt2img", txt2img.to_json()},
        {"img2txt", img2txt.to_json()},
        {"joint", joint.to_json()},
    };
    if (log_likelihoods) {
        j["log_likelihoods"] = {
            {"logp_x1", log_likelihoods->logp_x1},
            {"logp_joint", log_likelihoods->logp_joint},
            {"logp_x1_given_x2", log_likelihoods->logp_x1_given_x2},
            {"importance_samples", log_likelihoods->importance_samples},
        };
    } else {
        j["log_likelihoods"] = nullptr;
    }
    return j;
}

ShapeClassifier load_or_train_classifier(const std::string& level_dir) {
    const auto path = (fs::path(level_dir) / ShapeClassifier::file_name()).string();
    if (fs::exists(path)) return ShapeClassifier::load(path);
    // train deterministically from the dataset's recorded master seed
    std::ifstream meta_in(fs::path(level_dir) / "dataset.json");
    if (!meta_in) throw io_error("dataset.json missing under " + level_dir);
    json meta = json::parse(meta_in);
    auto cls = ShapeClassifier::train(meta.at("level").get<int>(),
                                      meta.at("master_seed").get<std::uint64_t>());
    cls.save(path);
    return cls;
}

EvaluationResult evaluate_checkpoint(const std::string& checkpoint_path,
                                     const std::string& dataset_dir, int level,
                                     const EvaluateOptions& options) {
    const int ckpt_level = checkpoint_level(checkpoint_path);
    if (ckpt_level != level)
        throw contract_error("refusing evaluation: checkpoint was trained at level " +
                             std::to_string(ckpt_level) + " but the dataset level is " +
                             std::to_string(level));
    const std::string level_dir = cdsprites::level_dir_path(dataset_dir, level);
    if (cdsprites::read_dataset_level(level_dir) != level)
        throw contract_error("dataset directory does not hold level " +
                             std::to_string(level));

    auto model = load_checkpoint(checkpoint_path);
    auto classifier = load_or_train_classifier(level_dir);
    auto test = TestSet::open(level_dir);
    if (options.max_samples > 0 && test.entries.size() > options.max_samples)
        test.entries.resize(options.max_samples);

    EvaluationResult result;
    result.level = level;
    result.strategy = models::strategy_name(model.strategy());
    result.txt2img = score_txt2img(model, test, classifier);
    result.img2txt = score_img2txt(model, test);
    result.joint = score_joint(model, level, classifier, options.per_dim_samples,
                               options.traversal_lo, options.traversal_hi);

    if (options.importance_samples > 0) {
        core::Rng rng(core::derive_seed(options.eval_seed, 77));
        // chunked over the test split, weighted by chunk size
        const std::size_t chunk = 128;
        double x1 = 0, jnt = 0, cond = 0;
        std::size_t total = 0;
        for (std::size_t begin = 0; begin < test.entries.size(); begin += chunk) {
            const std::size_t end = std::min(test.entries.size(), begin + chunk);
            auto batch = batch_from_entries(test, begin, end, true, true);
            auto est = models::estimate_log_likelihoods(model, batch,
                                                        options.importance_samples, rng);
            const double w = static_cast<double>(end - begin);
            x1 += w * est.logp_x1;
            jnt += w * est.logp_joint;
            cond += w * est.logp_x1_given_x2;
            total += end - begin;
        }
        models::LogLikEstimates est;
        est.logp_x1 = x1 / static_cast<double>(total);
        est.logp_joint = jnt / static_cast<double>(total);
        est.logp_x1_given_x2 = cond / static_cast<double>(total);
        est.importance_samples = options.importance_samples;
        result.log_likelihoods = est;
    }
    return result;
}

}  // namespace mmvb::runner
