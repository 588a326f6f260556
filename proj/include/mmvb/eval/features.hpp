#pragma once

#include "mmvb/eval/shape_classifier.hpp"

namespace mmvb::eval {

using cdsprites::AttributeSet;
using cdsprites::Background;
using cdsprites::Color;
using cdsprites::Quadrant;
using cdsprites::Size;

// Estimated visual attributes of one image. Only the level's features are
// populated; `recognized` is false when the shape mask has fewer than 10
// pixels, in which case every feature counts as incorrect.
struct FeaturePrediction {
    int level = 1;
    bool recognized = false;
    Shape shape = Shape::heart;
    double shape_confidence = 0.0;
    Size size = Size::big;
    Color color = Color::white;
    Quadrant quadrant = Quadrant::unconstrained;
    Background background = Background::dark;

    // count of features matching the ground truth (0 when unrecognized)
    std::size_t matches(const AttributeSet& truth) const;
    bool all_match(const AttributeSet& truth) const;
};

// Analytic extractors for background (border luminance), size (calibrated
// area threshold), quadrant (mask centroid) and color (nearest palette
// chromaticity); the shape comes from the frozen classifier.
FeaturePrediction extract_features(const Rgb8Image& image, int level,
                                   const ShapeClassifier& classifier);

}  // namespace mmvb::eval
