#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "mmvb/eval/coherence.hpp"
#include "mmvb/models/loglik.hpp"
#include "mmvb/runner/config.hpp"

namespace mmvb::runner {

struct EvaluationResult {
    eval::CoherenceReport txt2img;
    eval::CoherenceReport img2txt;
    eval::CoherenceReport joint;
    std::optional<models::LogLikEstimates> log_likelihoods;
    int level = 0;
    std::string strategy;

    nlohmann::json to_json() const;
};

struct EvaluateOptions {
    std::size_t per_dim_samples = 1000;
    double traversal_lo = -6.0;
    double traversal_hi = 6.0;
    std::size_t importance_samples = 0;  // 0 = skip log-likelihoods
    std::size_t max_samples = 0;         // 0 = whole test split
    std::uint64_t eval_seed = 1;
};

// Loads the checkpoint (refusing a level mismatch against the dataset), runs
// the three coherence scorers and, when importance_samples > 0, the
// log-likelihood estimator over the test split. The shape classifier is read
// from the dataset level directory (trained and saved there on first use,
// seeded from the dataset's master seed).
EvaluationResult evaluate_checkpoint(const std::string& checkpoint_path,
                                     const std::string& dataset_dir, int level,
                                     const EvaluateOptions& options = {});

// classifier cache path helper: <level_dir>/shape_classifier.json
eval::ShapeClassifier load_or_train_classifier(const std::string& level_dir);

}  // namespace mmvb::runner
