#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "mmvb/cdsprites/dataset.hpp"
#include "mmvb/eval/caption_parse.hpp"
#include "mmvb/eval/features.hpp"
#include "mmvb/models/vae.hpp"

namespace mmvb::eval {

// Strict / Features / Letters coherence metrics. Strict counts samples with
// every level feature correct; Features is the mean correct-feature count out
// of the level total; Letters (text outputs only) is the mean percentage of
// position-wise correct characters against the ground-truth caption.
struct CoherenceReport {
    std::string direction;  // txt2img | img2txt | joint
    double strict_pct = 0.0;
    double features_mean = 0.0;
    double features_sd = 0.0;
    std::size_t features_total = 0;
    std::optional<double> letters_pct;
    std::size_t n_samples = 0;
    std::map<std::string, double> per_feature_pct;

    nlohmann::json to_json() const;
};

struct TestSet {
    std::string split_dir;
    int level = 1;
    std::vector<cdsprites::ManifestEntry> entries;

    static TestSet open(const std::string& level_dir, const std::string& split = "test");
};

// Caption -> image: cross-generate images from the ground-truth captions and
// compare extracted features against the captions' attributes.
CoherenceReport score_txt2img(const models::MultimodalVae& model, const TestSet& test,
                              const ShapeClassifier& classifier);

// Image -> caption: Strict is exact string equality with the ground truth.
CoherenceReport score_img2txt(const models::MultimodalVae& model, const TestSet& test);

// Joint generation over latent traversals: a pair is Strict-correct iff the
// image features are all recognized, the caption parses fully, and every
// feature agrees between the two.
CoherenceReport score_joint(const models::MultimodalVae& model, int level,
                            const ShapeClassifier& classifier,
                            std::size_t per_dim_samples = 1000, double lo = -6.0,
                            double hi = 6.0);

// Shared helper: build a ModalityBatch for a contiguous entry range.
models::ModalityBatch batch_from_entries(const TestSet& test, std::size_t begin,
                                         std::size_t end, bool with_images,
                                         bool with_text);

// Generator-agnostic variants; the model scorers above reduce to these, and
// tests drive them with ground-truth oracles or adversarial generators.
CoherenceReport score_txt2img_generated(
    const TestSet& test, const std::function<cdsprites::Rgb8Image(std::size_t)>& image_of,
    const ShapeClassifier& classifier);
CoherenceReport score_img2txt_generated(
    const TestSet& test, const std::function<std::string(std::size_t)>& caption_of);
CoherenceReport score_joint_pairs(
    int level, std::size_t n_pairs,
    const std::function<std::pair<cdsprites::Rgb8Image, std::string>(std::size_t)>& pair_of,
    const ShapeClassifier& classifier);

}  // namespace mmvb::eval
