#include "mmvb/eval/features.hpp"

#include <cmath>

#include "mmvb/cdsprites/render.hpp"
#include "mmvb/core/error.hpp"

namespace mmvb::eval {

using namespace cdsprites;

namespace {

constexpr std::size_t kMinMaskArea = 10;

Color nearest_palette_color(double r, double g, double b) {
    // brightness-normalized chromaticity; the multiplicative texture cancels
    const double sum = r + g + b + 1e-12;
    const double cr = r / sum, cg = g / sum, cb = b / sum;
    Color best = Color::red;
    double best_d = 1e300;
    for (Color c : {Color::red, Color::green, Color::blue, Color::yellow, Color::pink}) {
        const Rgb proto = base_color(c);
        const double ps = proto.r + proto.g + proto.b;
        const double dr = cr - proto.r / ps;
        const double dg = cg - proto.g / ps;
        const double db = cb - proto.b / ps;
        const double d = dr * dr + dg * dg + db * db;
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

}  // namespace

std::size_t FeaturePrediction::matches(const AttributeSet& truth) const {
    if (!recognized) return 0;
    std::size_t n = 0;
    if (shape == truth.shape) ++n;
    if (level_has_size(level) && size == truth.size) ++n;
    if (level_has_color(level) && color == truth.color) ++n;
    if (level_has_quadrant(level) && quadrant == truth.quadrant) ++n;
    if (level_has_background(level) && background == truth.background) ++n;
    return n;
}

bool FeaturePrediction::all_match(const AttributeSet& truth) const {
    return matches(truth) == feature_count(level);
}

FeaturePrediction extract_features(const Rgb8Image& image, int level,
                                   const ShapeClassifier& classifier) {
    if (level != classifier.level())
        throw contract_error("extract_features: classifier level " +
                             std::to_string(classifier.level()) +
                             " does not match requested level " + std::to_string(level));
    FeaturePrediction out;
    out.level = level;
    const MaskAnalysis analysis = analyze_mask(image);
    if (analysis.area < kMinMaskArea) return out;  // unrecognized
    out.recognized = true;

    out.shape = classifier.classify(analysis, &out.shape_confidence);
    if (level_has_size(level))
        out.size = static_cast<double>(analysis.area) >= classifier.size_threshold()
                       ? Size::big
                       : Size::small;
    if (level_has_color(level))
        out.color = nearest_palette_color(analysis.mean_r, analysis.mean_g,
                                          analysis.mean_b);
    if (level_has_quadrant(level)) {
        const bool left = analysis.centroid_x < kImageSize / 2.0;
        const bool top = analysis.centroid_y < kImageSize / 2.0;
        out.quadrant = top ? (left ? Quadrant::top_left : Quadrant::top_right)
                           : (left ? Quadrant::bottom_left : Quadrant::bottom_right);
    }
    if (level_has_background(level))
        out.background = analysis.border_luma < 0.5 ? Background::dark : Background::light;
    return out;
}

}  // namespace mmvb::eval
