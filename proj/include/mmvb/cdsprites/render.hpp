#pragma once

#include <cstdint>

#include "mmvb/cdsprites/attributes.hpp"
#include "mmvb/cdsprites/png.hpp"

// Rasterizer for CdSprites+ samples (64x64x3, 8-bit). Deterministic in
// (attributes, seed): same inputs give bit-identical images.
//
// Geometry: rotation uniform in [0, 360); big shapes have a 40 px bounding
// box, small ones 8 px (the 1:5 linear-extent ratio). Placement samples the
// shape centroid from a Gaussian - levels 1-3 around the image center with
// 25 px spread, levels 4-5 around the quadrant center with 8 px spread -
// rejecting until the whole shape fits (levels 4-5 additionally keep the
// centroid inside its quadrant); after 100 rejections the centroid clamps to
// the nearest feasible point. Shape fill is the base color times a value-
// noise field in [0.6, 1.0]; backgrounds are flat black below level 5 and
// textured dark/light gray (0.15 / 0.85, field in [0.8, 1.0]) at level 5.

namespace mmvb::cdsprites {

inline constexpr int kImageSize = 64;
inline constexpr double kBigBoxPx = 40.0;
inline constexpr double kSmallBoxPx = 8.0;
inline constexpr double kCenterSpreadPx = 25.0;
inline constexpr double kQuadrantSpreadPx = 8.0;
inline constexpr double kDarkLuma = 0.15;
inline constexpr double kLightLuma = 0.85;

struct Rgb {
    double r, g, b;
};

Rgb base_color(Color c);

Rgb8Image render_image(const AttributeSet& attrs, std::uint64_t seed);

// Exposed for the evaluator's calibration and tests.
struct PlacedShape {
    double centroid_x = 0.0;  // image coordinates, x right / y down
    double centroid_y = 0.0;
    double rotation = 0.0;
    double box_px = 0.0;
};
PlacedShape place_shape(const AttributeSet& attrs, std::uint64_t seed);

}  // namespace mmvb::cdsprites
