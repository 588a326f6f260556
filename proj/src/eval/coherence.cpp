#include "mmvb/eval/coherence.hpp"

#include <cmath>
#include <filesystem>

#include "mmvb/cdsprites/caption_codec.hpp"
#include "mmvb/cdsprites/render.hpp"
#include "mmvb/core/error.hpp"
#include "mmvb/models/generate.hpp"

namespace mmvb::eval {

using namespace cdsprites;
using namespace models;
using nlohmann::json;

namespace {

constexpr std::size_t kChunk = 256;

std::vector<std::string> level_feature_names(int level) {
    std::vector<std::string> names = {"shape"};
    if (level_has_size(level)) names.push_back("size");
    if (level_has_color(level)) names.push_back("color");
    if (level_has_quadrant(level)) names.push_back("quadrant");
    if (level_has_background(level)) names.push_back("background");
    return names;
}

// accumulates strict/feature tallies and enforces the set-theoretic
// invariant strict <= min per-feature accuracy on finish
struct ReportAccumulator {
    std::string direction;
    int level;
    std::size_t n = 0;
    std::size_t strict = 0;
    double match_sum = 0.0, match_sq_sum = 0.0;
    std::map<std::string, std::size_t> feature_hits;
    double letters_sum = 0.0;
    bool with_letters = false;

    ReportAccumulator(std::string dir, int level_in)
        : direction(std::move(dir)), level(level_in) {
        for (const auto& f : level_feature_names(level)) feature_hits[f] = 0;
    }

    void add(bool strict_ok, std::size_t matches,
             const std::map<std::string, bool>& per_feature) {
        ++n;
        if (strict_ok) ++strict;
        match_sum += static_cast<double>(matches);
        match_sq_sum += static_cast<double>(matches) * static_cast<double>(matches);
        for (const auto& [name, ok] : per_feature)
            if (ok) feature_hits[name]++;
    }

    CoherenceReport finish() const {
        if (n == 0) throw contract_error("coherence scoring saw no samples");
        CoherenceReport r;
        r.direction = direction;
        r.n_samples = n;
        r.features_total = feature_count(level);
        r.strict_pct = 100.0 * static_cast<double>(strict) / static_cast<double>(n);
        r.features_mean = match_sum / static_cast<double>(n);
        const double var =
            match_sq_sum / static_cast<double>(n) - r.features_mean * r.features_mean;
        r.features_sd = std::sqrt(std::max(0.0, var));
        if (with_letters) r.letters_pct = letters_sum / static_cast<double>(n);
        for (const auto& [name, hits] : feature_hits)
            r.per_feature_pct[name] =
                100.0 * static_cast<double>(hits) / static_cast<double>(n);
        for (const auto& [name, pct] : r.per_feature_pct)
            if (r.strict_pct > pct + 1e-9)
                throw numeric_error("coherence invariant violated: strict " +
                                    std::to_string(r.strict_pct) + "% exceeds feature '" +
                                    name + "' accuracy " + std::to_string(pct) + "%");
        return r;
    }
};

Rgb8Image row_to_image(std::span<const double> row) {
    Rgb8Image img;
    img.width = kImageSize;
    img.height = kImageSize;
    img.pixels.resize(row.size());
    for (std::size_t i = 0; i < row.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(
            std::lround(255.0 * std::clamp(row[i], 0.0, 1.0)));
    return img;
}

std::map<std::string, bool> feature_flags_vs_truth(const FeaturePrediction& pred,
                                                   const AttributeSet& truth) {
    std::map<std::string, bool> out;
    out["shape"] = pred.recognized && pred.shape == truth.shape;
    if (level_has_size(truth.level))
        out["size"] = pred.recognized && pred.size == truth.size;
    if (level_has_color(truth.level))
        out["color"] = pred.recognized && pred.color == truth.color;
    if (level_has_quadrant(truth.level))
        out["quadrant"] = pred.recognized && pred.quadrant == truth.quadrant;
    if (level_has_background(truth.level))
        out["background"] = pred.recognized && pred.background == truth.background;
    return out;
}

std::map<std::string, bool> parse_flags_vs_truth(const CaptionParse& parse,
                                                 const AttributeSet& truth) {
    std::map<std::string, bool> out;
    out["shape"] = parse.shape && *parse.shape == truth.shape;
    if (level_has_size(truth.level)) out["size"] = parse.size && *parse.size == truth.size;
    if (level_has_color(truth.level))
        out["color"] = parse.color && *parse.color == truth.color;
    if (level_has_quadrant(truth.level))
        out["quadrant"] = parse.quadrant && *parse.quadrant == truth.quadrant;
    if (level_has_background(truth.level))
        out["background"] = parse.background && *parse.background == truth.background;
    return out;
}

std::size_t count_true(const std::map<std::string, bool>& flags) {
    std::size_t n = 0;
    for (const auto& [_, ok] : flags)
        if (ok) ++n;
    return n;
}

void tally_txt2img(ReportAccumulator& acc, const FeaturePrediction& pred,
                   const AttributeSet& truth) {
    const auto flags = feature_flags_vs_truth(pred, truth);
    acc.add(pred.all_match(truth), count_true(flags), flags);
}

void tally_img2txt(ReportAccumulator& acc, const std::string& caption,
                   const cdsprites::ManifestEntry& entry, int level) {
    const auto parse = parse_caption(caption, level);
    const auto flags = parse_flags_vs_truth(parse, entry.attrs);
    // letters: positions beyond the generated length count as wrong, divisor
    // is the ground-truth length
    std::size_t hits = 0;
    for (std::size_t p = 0; p < entry.caption.size(); ++p)
        if (p < caption.size() && caption[p] == entry.caption[p]) ++hits;
    acc.letters_sum +=
        100.0 * static_cast<double>(hits) / static_cast<double>(entry.caption.size());
    acc.add(caption == entry.caption, count_true(flags), flags);
}

void tally_joint(ReportAccumulator& acc, const FeaturePrediction& pred,
                 const CaptionParse& parse, int level) {
    // pairwise agreement between the image and the caption
    std::map<std::string, bool> flags;
    flags["shape"] = pred.recognized && parse.shape && pred.shape == *parse.shape;
    if (level_has_size(level))
        flags["size"] = pred.recognized && parse.size && pred.size == *parse.size;
    if (level_has_color(level))
        flags["color"] = pred.recognized && parse.color && pred.color == *parse.color;
    if (level_has_quadrant(level))
        flags["quadrant"] =
            pred.recognized && parse.quadrant && pred.quadrant == *parse.quadrant;
    if (level_has_background(level))
        flags["background"] =
            pred.recognized && parse.background && pred.background == *parse.background;
    const std::size_t matched = count_true(flags);
    const bool strict =
        pred.recognized && parse.parses_fully && matched == feature_count(level);
    acc.add(strict, matched, flags);
}

}  // namespace

json CoherenceReport::to_json() const {
    json j = {
        {"direction", direction},
        {"strict_pct", strict_pct},
        {"features_mean", features_mean},
        {"features_sd", features_sd},
        {"features_total", features_total},
        {"n_samples", n_samples},
        {"per_feature_pct", per_feature_pct},
    };
    if (letters_pct) {
        j["letters_pct"] = *letters_pct;
    } else {
        j["letters_pct"] = nullptr;
    }
    return j;
}

TestSet TestSet::open(const std::string& level_dir, const std::string& split) {
    TestSet t;
    t.level = read_dataset_level(level_dir);
    t.split_dir = (std::filesystem::path(level_dir) / split).string();
    t.entries = read_manifest(t.split_dir, t.level);
    return t;
}

ModalityBatch batch_from_entries(const TestSet& test, std::size_t begin, std::size_t end,
                                 bool with_images, bool with_text) {
    const std::size_t b = end - begin;
    ModalityBatch batch;
    batch.batch_size = b;
    batch.availability = {with_images, with_text};
    if (with_images) {
        std::vector<double> img(b * 64 * 64 * 3);
        for (std::size_t i = 0; i < b; ++i) {
            const auto px = load_entry_image(test.split_dir, test.entries[begin + i]);
            for (std::size_t j = 0; j < px.pixels.size(); ++j)
                img[i * px.pixels.size() + j] = px.pixels[j] / 255.0;
        }
        batch.image = core::Tensor::from({b, 64 * 64 * 3}, std::move(img));
    }
    if (with_text) {
        std::vector<double> onehot(b * kMaxCaptionLen * 27, 0.0);
        batch.text_mask.assign(b * kMaxCaptionLen, 0);
        for (std::size_t i = 0; i < b; ++i) {
            const auto enc = encode_caption_padded(test.entries[begin + i].caption);
            std::copy(enc.onehot.begin(), enc.onehot.end(),
                      onehot.begin() + i * enc.onehot.size());
            std::copy(enc.mask.begin(), enc.mask.end(),
                      batch.text_mask.begin() + i * kMaxCaptionLen);
        }
        batch.text_onehot = core::Tensor::from({b, kMaxCaptionLen * 27}, std::move(onehot));
    }
    return batch;
}

CoherenceReport score_txt2img(const MultimodalVae& model, const TestSet& test,
                              const ShapeClassifier& classifier) {
    ReportAccumulator acc("txt2img", test.level);
    const std::size_t img_dim = model.shapes().image_dim;
    for (std::size_t begin = 0; begin < test.entries.size(); begin += kChunk) {
        const std::size_t end = std::min(test.entries.size(), begin + kChunk);
        auto batch = batch_from_entries(test, begin, end, false, true);
        auto gen = cross_generate(model, batch, kText, kImage);
        for (std::size_t i = 0; i < end - begin; ++i) {
            const auto img = row_to_image(gen.output.values().subspan(i * img_dim, img_dim));
            tally_txt2img(acc, extract_features(img, test.level, classifier),
                          test.entries[begin + i].attrs);
        }
    }
    return acc.finish();
}

CoherenceReport score_txt2img_generated(
    const TestSet& test, const std::function<Rgb8Image(std::size_t)>& image_of,
    const ShapeClassifier& classifier) {
    ReportAccumulator acc("txt2img", test.level);
    for (std::size_t i = 0; i < test.entries.size(); ++i)
        tally_txt2img(acc, extract_features(image_of(i), test.level, classifier),
                      test.entries[i].attrs);
    return acc.finish();
}

CoherenceReport score_img2txt(const MultimodalVae& model, const TestSet& test) {
    ReportAccumulator acc("img2txt", test.level);
    acc.with_letters = true;
    for (std::size_t begin = 0; begin < test.entries.size(); begin += kChunk) {
        const std::size_t end = std::min(test.entries.size(), begin + kChunk);
        auto batch = batch_from_entries(test, begin, end, true, false);
        auto gen = cross_generate(model, batch, kImage, kText);
        for (std::size_t i = 0; i < end - begin; ++i)
            tally_img2txt(acc, gen.captions[i], test.entries[begin + i], test.level);
    }
    return acc.finish();
}

CoherenceReport score_img2txt_generated(
    const TestSet& test, const std::function<std::string(std::size_t)>& caption_of) {
    ReportAccumulator acc("img2txt", test.level);
    acc.with_letters = true;
    for (std::size_t i = 0; i < test.entries.size(); ++i)
        tally_img2txt(acc, caption_of(i), test.entries[i], test.level);
    return acc.finish();
}

CoherenceReport score_joint(const MultimodalVae& model, int level,
                            const ShapeClassifier& classifier,
                            std::size_t per_dim_samples, double lo, double hi) {
    ReportAccumulator acc("joint", level);
    joint_generate_traversal(model, per_dim_samples, lo, hi, [&](JointSample&& s) {
        const auto img = row_to_image(s.image);
        tally_joint(acc, extract_features(img, level, classifier),
                    parse_caption(s.caption, level), level);
    });
    return acc.finish();
}

CoherenceReport score_joint_pairs(
    int level, std::size_t n_pairs,
    const std::function<std::pair<Rgb8Image, std::string>(std::size_t)>& pair_of,
    const ShapeClassifier& classifier) {
    ReportAccumulator acc("joint", level);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        auto [img, caption] = pair_of(i);
        tally_joint(acc, extract_features(img, level, classifier),
                    parse_caption(caption, level), level);
    }
    return acc.finish();
}

}  // namespace mmvb::eval
