#include "mmvb/cdsprites/render.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmvb/core/error.hpp"
#include "mmvb/core/rng.hpp"

namespace mmvb::cdsprites {

using core::Rng;

namespace {

constexpr double kPi = 3.14159265358979323846;

// canonical heart: (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0, y up
bool heart_inside_canonical(double x, double y) {
    const double q = x * x + y * y - 1.0;
    return q * q * q - x * x * y * y * y <= 0.0;
}

// measured once over a fine grid: bounds, centroid and convex hull of the
// canonical heart, used for scaling and rotation-exact placement margins
struct HeartGeometry {
    double span = 0.0;                        // larger bbox dimension
    double centroid_x = 0.0, centroid_y = 0.0;
    std::vector<std::pair<double, double>> hull;  // relative to centroid, y up
};

const HeartGeometry& heart_geometry() {
    static const HeartGeometry g = [] {
        HeartGeometry h;
        const int n = 600;
        double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
        double sum_x = 0, sum_y = 0;
        std::size_t count = 0;
        std::vector<std::pair<double, double>> pts;
        for (int iy = 0; iy < n; ++iy) {
            for (int ix = 0; ix < n; ++ix) {
                const double x = -1.5 + 3.0 * (ix + 0.5) / n;
                const double y = -1.5 + 3.0 * (iy + 0.5) / n;
                if (!heart_inside_canonical(x, y)) continue;
                min_x = std::min(min_x, x);
                max_x = std::max(max_x, x);
                min_y = std::min(min_y, y);
                max_y = std::max(max_y, y);
                sum_x += x;
                sum_y += y;
                ++count;
                pts.emplace_back(x, y);
            }
        }
        h.span = std::max(max_x - min_x, max_y - min_y);
        h.centroid_x = sum_x / static_cast<double>(count);
        h.centroid_y = sum_y / static_cast<double>(count);

        // Andrew monotone chain over the inside samples
        std::sort(pts.begin(), pts.end());
        const auto cross = [](const std::pair<double, double>& o,
                              const std::pair<double, double>& a,
                              const std::pair<double, double>& b) {
            return (a.first - o.first) * (b.second - o.second) -
                   (a.second - o.second) * (b.first - o.first);
        };
        std::vector<std::pair<double, double>> hull(2 * pts.size());
        std::size_t k = 0;
        for (const auto& p : pts) {
            while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
            hull[k++] = p;
        }
        const std::size_t lower = k + 1;
        for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
            while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
            hull[k++] = *it;
        }
        hull.resize(k ? k - 1 : 0);
        for (auto& p : hull) {
            p.first -= h.centroid_x;
            p.second -= h.centroid_y;
        }
        h.hull = std::move(hull);
        return h;
    }();
    return g;
}

// shape frame: canonical coordinates scaled so the bounding box spans box_px
// in the larger dimension; image axes are x right, y down
struct ShapeFrame {
    Shape shape;
    double box_px;
    double scale;        // canonical units -> px
    double centroid_dx;  // canonical centroid offset in px, image axes
    double centroid_dy;

    bool inside(double px_x, double px_y) const {
        const double x = px_x / scale;
        const double y = px_y / scale;
        switch (shape) {
            case Shape::square:
                return std::abs(x) <= 0.5 && std::abs(y) <= 0.5;
            case Shape::ellipse: {
                const double ex = x / 0.5, ey = y / 0.25;
                return ex * ex + ey * ey <= 1.0;
            }
            case Shape::heart:
                return heart_inside_canonical(x, -y);  // canonical y is up
        }
        return false;
    }

    // half-extents of the rotated shape about its centroid
    void rotated_extent(double rot, double& ex, double& ey) const {
        const double c = std::cos(rot), s = std::sin(rot);
        switch (shape) {
            case Shape::square: {
                const double half = 0.5 * box_px;
                ex = ey = half * (std::abs(c) + std::abs(s));
                return;
            }
            case Shape::ellipse: {
                const double a = 0.5 * scale, b = 0.25 * scale;
                ex = std::sqrt(a * a * c * c + b * b * s * s);
                ey = std::sqrt(a * a * s * s + b * b * c * c);
                return;
            }
            case Shape::heart: {
                ex = ey = 0.0;
                for (const auto& [hx, hy] : heart_geometry().hull) {
                    // canonical y-up -> image y-down, then rotate by rot
                    const double ix = hx * scale, iy = -hy * scale;
                    ex = std::max(ex, std::abs(c * ix - s * iy));
                    ey = std::max(ey, std::abs(s * ix + c * iy));
                }
                return;
            }
        }
    }
};

ShapeFrame make_frame(Shape shape, Size size) {
    ShapeFrame f;
    f.shape = shape;
    f.box_px = size == Size::big ? kBigBoxPx : kSmallBoxPx;
    switch (shape) {
        case Shape::square:
        case Shape::ellipse:
            f.scale = f.box_px;
            f.centroid_dx = 0.0;
            f.centroid_dy = 0.0;
            break;
        case Shape::heart: {
            const auto& g = heart_geometry();
            f.scale = f.box_px / g.span;
            f.centroid_dx = g.centroid_x * f.scale;
            f.centroid_dy = -g.centroid_y * f.scale;  // flip to image axes
            break;
        }
    }
    return f;
}

// value noise: lattice of uniforms, smoothstep-interpolated, ~8 px scale
struct NoiseField {
    static constexpr int kLattice = 9;  // 9x9 over 64 px => 8 px cells
    double values[kLattice * kLattice];
    double lo, hi;

    NoiseField(Rng& rng, double lo_in, double hi_in) : lo(lo_in), hi(hi_in) {
        for (double& v : values) v = rng.uniform();
    }

    double at(double x, double y) const {
        const double cell = static_cast<double>(kImageSize) / (kLattice - 1);
        double fx = std::clamp(x / cell, 0.0, kLattice - 1.000001);
        double fy = std::clamp(y / cell, 0.0, kLattice - 1.000001);
        const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
        double tx = fx - ix, ty = fy - iy;
        tx = tx * tx * (3 - 2 * tx);
        ty = ty * ty * (3 - 2 * ty);
        const double v00 = values[iy * kLattice + ix];
        const double v10 = values[iy * kLattice + ix + 1];
        const double v01 = values[(iy + 1) * kLattice + ix];
        const double v11 = values[(iy + 1) * kLattice + ix + 1];
        const double v = (v00 * (1 - tx) + v10 * tx) * (1 - ty) +
                         (v01 * (1 - tx) + v11 * tx) * ty;
        return lo + (hi - lo) * v;
    }
};

struct QuadrantBox {
    double min_x, max_x, min_y, max_y;
};

QuadrantBox quadrant_box(Quadrant q) {
    constexpr double half = kImageSize / 2.0;
    constexpr double buffer = 1.5;  // keeps the measured mask centroid inside
    switch (q) {
        case Quadrant::top_left: return {0, half - buffer, 0, half - buffer};
        case Quadrant::top_right: return {half + buffer, kImageSize, 0, half - buffer};
        case Quadrant::bottom_left: return {0, half - buffer, half + buffer, kImageSize};
        case Quadrant::bottom_right:
            return {half + buffer, kImageSize, half + buffer, kImageSize};
        case Quadrant::unconstrained: return {0, kImageSize, 0, kImageSize};
    }
    return {0, kImageSize, 0, kImageSize};
}

double quadrant_center_x(Quadrant q) {
    return (q == Quadrant::top_left || q == Quadrant::bottom_left) ? 16.0 : 48.0;
}
double quadrant_center_y(Quadrant q) {
    return (q == Quadrant::top_left || q == Quadrant::top_right) ? 16.0 : 48.0;
}

}  // namespace

Rgb base_color(Color c) {
    switch (c) {
        case Color::white: return {1.0, 1.0, 1.0};
        case Color::red: return {0.90, 0.10, 0.10};
        case Color::green: return {0.10, 0.80, 0.20};
        case Color::blue: return {0.15, 0.25, 0.90};
        case Color::yellow: return {0.95, 0.85, 0.10};
        case Color::pink: return {0.95, 0.35, 0.65};
    }
    return {1.0, 1.0, 1.0};
}

PlacedShape place_shape(const AttributeSet& attrs, std::uint64_t seed) {
    attrs.validate();
    Rng rng(seed);
    const double rotation = rng.uniform(0.0, 2.0 * kPi);
    const ShapeFrame frame = make_frame(attrs.shape, attrs.size);
    double ext_x = 0, ext_y = 0;
    frame.rotated_extent(rotation, ext_x, ext_y);

    const bool quadrant_mode = level_has_quadrant(attrs.level);
    const double mu_x =
        quadrant_mode ? quadrant_center_x(attrs.quadrant) : kImageSize / 2.0;
    const double mu_y =
        quadrant_mode ? quadrant_center_y(attrs.quadrant) : kImageSize / 2.0;
    const double spread = quadrant_mode ? kQuadrantSpreadPx : kCenterSpreadPx;
    const QuadrantBox qbox = quadrant_box(quadrant_mode ? attrs.quadrant
                                                        : Quadrant::unconstrained);

    // the whole shape must fit the image: centroid at least extent+0.5 from
    // the borders, intersected with the quadrant band when applicable
    const double lo_x = std::max(ext_x + 0.5, qbox.min_x);
    const double hi_x = std::min(kImageSize - ext_x - 0.5, qbox.max_x);
    const double lo_y = std::max(ext_y + 0.5, qbox.min_y);
    const double hi_y = std::min(kImageSize - ext_y - 0.5, qbox.max_y);

    double cx = 0, cy = 0;
    bool placed = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
        const double x = mu_x + spread * rng.normal();
        const double y = mu_y + spread * rng.normal();
        if (x >= lo_x && x <= hi_x && y >= lo_y && y <= hi_y) {
            cx = x;
            cy = y;
            placed = true;
            break;
        }
    }
    if (!placed) {
        // deterministic fallback: nearest feasible point to the target center
        cx = std::clamp(mu_x, lo_x, hi_x);
        cy = std::clamp(mu_y, lo_y, hi_y);
    }
    return {cx, cy, rotation, frame.box_px};
}

Rgb8Image render_image(const AttributeSet& attrs, std::uint64_t seed) {
    attrs.validate();
    const PlacedShape placed = place_shape(attrs, seed);
    const ShapeFrame frame = make_frame(attrs.shape, attrs.size);

    // texture lattices use decorrelated child streams, so raster output does
    // not depend on how many placement attempts were consumed
    Rng fill_rng(core::derive_seed(seed, 101));
    NoiseField fill_field(fill_rng, 0.6, 1.0);
    const bool textured_bg = level_has_background(attrs.level);
    Rng bg_rng(core::derive_seed(seed, 102));
    NoiseField bg_field(bg_rng, 0.8, 1.0);

    const Rgb color = base_color(attrs.color);
    const double bg_luma = attrs.background == Background::light ? kLightLuma : kDarkLuma;

    const double cosr = std::cos(placed.rotation), sinr = std::sin(placed.rotation);
    // canonical origin position in the image: centroid minus rotated offset
    const double ox =
        placed.centroid_x - (cosr * frame.centroid_dx - sinr * frame.centroid_dy);
    const double oy =
        placed.centroid_y - (sinr * frame.centroid_dx + cosr * frame.centroid_dy);

    Rgb8Image img;
    img.width = kImageSize;
    img.height = kImageSize;
    img.pixels.resize(static_cast<std::size_t>(kImageSize) * kImageSize * 3);

    for (int py = 0; py < kImageSize; ++py) {
        for (int px = 0; px < kImageSize; ++px) {
            // 3x3 supersampled coverage
            int hits = 0;
            for (int sy = 0; sy < 3; ++sy) {
                for (int sx = 0; sx < 3; ++sx) {
                    const double x = px + (sx + 0.5) / 3.0 - ox;
                    const double y = py + (sy + 0.5) / 3.0 - oy;
                    const double rx = cosr * x + sinr * y;  // rotate by -theta
                    const double ry = -sinr * x + cosr * y;
                    if (frame.inside(rx, ry)) ++hits;
                }
            }
            const double coverage = hits / 9.0;
            double r = 0, g = 0, b = 0;
            if (textured_bg) {
                const double f = bg_field.at(px + 0.5, py + 0.5);
                r = g = b = bg_luma * f;
            }
            if (coverage > 0.0) {
                const double f = fill_field.at(px + 0.5, py + 0.5);
                r = (1 - coverage) * r + coverage * color.r * f;
                g = (1 - coverage) * g + coverage * color.g * f;
                b = (1 - coverage) * b + coverage * color.b * f;
            }
            const std::size_t at = (static_cast<std::size_t>(py) * kImageSize + px) * 3;
            img.pixels[at + 0] =
                static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(r, 0.0, 1.0)));
            img.pixels[at + 1] =
                static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(g, 0.0, 1.0)));
            img.pixels[at + 2] =
                static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(b, 0.0, 1.0)));
        }
    }
    return img;
}

}  // namespace mmvb::cdsprites
