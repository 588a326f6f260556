#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmvb/cdsprites/attributes.hpp"
#include "mmvb/cdsprites/png.hpp"

namespace mmvb::eval {

using cdsprites::Rgb8Image;
using cdsprites::Shape;

// Binary shape mask plus the statistics the feature extractors run on.
struct MaskAnalysis {
    std::vector<std::uint8_t> mask;  // 64*64
    std::size_t area = 0;
    double centroid_x = 0.0;  // pixel-center coordinates
    double centroid_y = 0.0;
    double border_luma = 0.0;   // median border luminance (background estimate)
    double mean_r = 0.0, mean_g = 0.0, mean_b = 0.0;  // over the mask
};

// Border-median background estimate per channel; mask = pixels whose largest
// channel deviation from that estimate exceeds 0.15.
MaskAnalysis analyze_mask(const Rgb8Image& image);

// Canonicalized mask descriptor fed to the classifier: the mask is centered
// on its centroid, rotated to its principal axis (180-degree flips resolved
// by the sign of the third moment), cropped to its bounding square and
// resampled to 16x16 fractional occupancy.
std::vector<double> mask_descriptor(const MaskAnalysis& analysis);

// Frozen multinomial-logistic classifier over the 16x16 mask descriptor,
// trained on labeled generator samples and shipped as a versioned JSON file
// alongside each generated dataset level. Also carries the calibrated
// big/small area threshold used by the size extractor.
class ShapeClassifier {
public:
    static constexpr std::size_t kGrid = 16;
    static constexpr std::size_t kFeatures = kGrid * kGrid;

    // trains on `samples` fresh generator samples of the given level
    static ShapeClassifier train(int level, std::uint64_t seed,
                                 std::size_t samples = 3000);

    Shape classify(const MaskAnalysis& analysis, double* confidence = nullptr) const;

    double size_threshold() const { return size_threshold_; }
    int level() const { return level_; }
    double training_accuracy() const { return training_accuracy_; }

    void save(const std::string& path) const;
    static ShapeClassifier load(const std::string& path);

    static std::string file_name() { return "shape_classifier.json"; }

private:
    int level_ = 1;
    std::uint32_t version_ = 1;
    std::vector<double> weights_;  // 3 x (kFeatures + 1), bias last
    double size_threshold_ = 0.0;  // geometric mean of calibrated areas
    double mean_big_area_ = 0.0;
    double mean_small_area_ = 0.0;
    double training_accuracy_ = 0.0;
};

}  // namespace mmvb::eval
