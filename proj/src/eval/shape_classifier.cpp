#include "mmvb/eval/shape_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mmvb/cdsprites/render.hpp"
#include "mmvb/core/error.hpp"
#include "mmvb/core/rng.hpp"

namespace mmvb::eval {

using cdsprites::kImageSize;
using nlohmann::json;

MaskAnalysis analyze_mask(const Rgb8Image& image) {
    MaskAnalysis out;
    const std::size_t n = static_cast<std::size_t>(kImageSize) * kImageSize;
    if (image.pixels.size() != n * 3)
        throw contract_error("analyze_mask: expected a 64x64 RGB image");

    // background estimate: per-channel median over the border ring
    std::vector<double> border_ch[3];
    std::vector<double> border_luma;
    for (int i = 0; i < kImageSize; ++i) {
        for (auto [x, y] : {std::pair{i, 0}, std::pair{i, kImageSize - 1},
                            std::pair{0, i}, std::pair{kImageSize - 1, i}}) {
            const std::size_t at = (static_cast<std::size_t>(y) * kImageSize + x) * 3;
            double luma = 0.0;
            for (int c = 0; c < 3; ++c) {
                const double v = image.pixels[at + c] / 255.0;
                border_ch[c].push_back(v);
                luma += v;
            }
            border_luma.push_back(luma / 3.0);
        }
    }
    double bg[3];
    for (int c = 0; c < 3; ++c) {
        auto& v = border_ch[c];
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        bg[c] = v[v.size() / 2];
    }
    std::nth_element(border_luma.begin(), border_luma.begin() + border_luma.size() / 2,
                     border_luma.end());
    out.border_luma = border_luma[border_luma.size() / 2];

    out.mask.assign(n, 0);
    double sx = 0, sy = 0;
    for (std::size_t p = 0; p < n; ++p) {
        double dev = 0.0;
        for (int c = 0; c < 3; ++c)
            dev = std::max(dev, std::abs(image.pixels[p * 3 + c] / 255.0 - bg[c]));
        if (dev <= 0.15) continue;
        out.mask[p] = 1;
        ++out.area;
        sx += static_cast<double>(p % kImageSize) + 0.5;
        sy += static_cast<double>(p / kImageSize) + 0.5;
    }
    if (out.area > 0) {
        const double inv = 1.0 / static_cast<double>(out.area);
        out.centroid_x = sx * inv;
        out.centroid_y = sy * inv;
    }

    // mean color over interior pixels (4-neighbor erosion) so antialiased
    // boundary pixels do not drag the chromaticity toward the background;
    // fall back to the full mask when the interior is tiny
    double sr = 0, sg = 0, sb = 0;
    std::size_t interior = 0;
    const auto masked = [&](int px, int py) -> bool {
        if (px < 0 || py < 0 || px >= kImageSize || py >= kImageSize) return false;
        return out.mask[static_cast<std::size_t>(py) * kImageSize + px] != 0;
    };
    for (int pass = 0; pass < 2 && interior == 0; ++pass) {
        const bool eroded = pass == 0;
        sr = sg = sb = 0;
        for (std::size_t p = 0; p < n; ++p) {
            if (!out.mask[p]) continue;
            const int px = static_cast<int>(p % kImageSize);
            const int py = static_cast<int>(p / kImageSize);
            if (eroded && !(masked(px - 1, py) && masked(px + 1, py) &&
                            masked(px, py - 1) && masked(px, py + 1)))
                continue;
            ++interior;
            sr += image.pixels[p * 3 + 0] / 255.0;
            sg += image.pixels[p * 3 + 1] / 255.0;
            sb += image.pixels[p * 3 + 2] / 255.0;
        }
        if (interior >= 4) break;
        interior = 0;
    }
    if (interior > 0) {
        const double inv = 1.0 / static_cast<double>(interior);
        out.mean_r = sr * inv;
        out.mean_g = sg * inv;
        out.mean_b = sb * inv;
    }
    return out;
}

std::vector<double> mask_descriptor(const MaskAnalysis& analysis) {
    constexpr std::size_t grid = ShapeClassifier::kGrid;
    std::vector<double> out(grid * grid, 0.0);
    if (analysis.area == 0) return out;

    // second central moments -> principal axis
    double m20 = 0, m02 = 0, m11 = 0;
    for (std::size_t p = 0; p < analysis.mask.size(); ++p) {
        if (!analysis.mask[p]) continue;
        const double dx = static_cast<double>(p % kImageSize) + 0.5 - analysis.centroid_x;
        const double dy = static_cast<double>(p / kImageSize) + 0.5 - analysis.centroid_y;
        m20 += dx * dx;
        m02 += dy * dy;
        m11 += dx * dy;
    }
    double theta = 0.5 * std::atan2(2.0 * m11, m20 - m02);

    // resolve the 180-degree ambiguity with the third moment along the axis
    double c = std::cos(theta), s = std::sin(theta);
    double skew = 0;
    for (std::size_t p = 0; p < analysis.mask.size(); ++p) {
        if (!analysis.mask[p]) continue;
        const double dx = static_cast<double>(p % kImageSize) + 0.5 - analysis.centroid_x;
        const double dy = static_cast<double>(p / kImageSize) + 0.5 - analysis.centroid_y;
        const double u = c * dx + s * dy;
        skew += u * u * u;
    }
    if (skew < 0) theta += 3.14159265358979323846;
    c = std::cos(theta);
    s = std::sin(theta);

    // bounding half-extent in the rotated frame
    double ext = 1e-6;
    for (std::size_t p = 0; p < analysis.mask.size(); ++p) {
        if (!analysis.mask[p]) continue;
        const double dx = static_cast<double>(p % kImageSize) + 0.5 - analysis.centroid_x;
        const double dy = static_cast<double>(p / kImageSize) + 0.5 - analysis.centroid_y;
        ext = std::max({ext, std::abs(c * dx + s * dy), std::abs(-s * dx + c * dy)});
    }
    ext *= 1.05;  // small halo so boundary cells are not clipped

    // bilinear sample of the binary mask at pixel-center coordinates; small
    // shapes are finer than the canonical grid, so subpixel weighting matters
    const auto sample = [&](double x, double y) {
        const double fx = x - 0.5, fy = y - 0.5;
        const int ix = static_cast<int>(std::floor(fx));
        const int iy = static_cast<int>(std::floor(fy));
        const double tx = fx - ix, ty = fy - iy;
        const auto at = [&](int px, int py) -> double {
            if (px < 0 || py < 0 || px >= kImageSize || py >= kImageSize) return 0.0;
            return analysis.mask[static_cast<std::size_t>(py) * kImageSize + px];
        };
        return (at(ix, iy) * (1 - tx) + at(ix + 1, iy) * tx) * (1 - ty) +
               (at(ix, iy + 1) * (1 - tx) + at(ix + 1, iy + 1) * tx) * ty;
    };

    // inverse-map each canonical cell (3x3 subsamples) back into the mask
    for (std::size_t gy = 0; gy < grid; ++gy) {
        for (std::size_t gx = 0; gx < grid; ++gx) {
            double acc = 0;
            for (int sy = 0; sy < 3; ++sy) {
                for (int sx = 0; sx < 3; ++sx) {
                    const double u = ((gx + (sx + 0.5) / 3.0) / grid * 2.0 - 1.0) * ext;
                    const double v = ((gy + (sy + 0.5) / 3.0) / grid * 2.0 - 1.0) * ext;
                    // rotate canonical -> image frame (by +theta)
                    const double ix = c * u - s * v + analysis.centroid_x;
                    const double iy = s * u + c * v + analysis.centroid_y;
                    acc += sample(ix, iy);
                }
            }
            out[gy * grid + gx] = acc / 9.0;
        }
    }
    return out;
}

namespace {

std::array<double, 3> softmax3(const double* logits) {
    const double mx = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> p{};
    double sum = 0;
    for (int k = 0; k < 3; ++k) {
        p[k] = std::exp(logits[k] - mx);
        sum += p[k];
    }
    for (int k = 0; k < 3; ++k) p[k] /= sum;
    return p;
}

void logits_of(const std::vector<double>& weights, const std::vector<double>& x,
               double* out) {
    const std::size_t d = ShapeClassifier::kFeatures;
    for (int k = 0; k < 3; ++k) {
        const double* w = weights.data() + static_cast<std::size_t>(k) * (d + 1);
        double acc = w[d];  // bias
        for (std::size_t i = 0; i < d; ++i) acc += w[i] * x[i];
        out[k] = acc;
    }
}

}  // namespace

ShapeClassifier ShapeClassifier::train(int level, std::uint64_t seed,
                                       std::size_t samples) {
    ShapeClassifier cls;
    cls.level_ = level;

    // labeled generator samples: cycle the level's combinations
    const auto combos = cdsprites::level_combinations(level);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    xs.reserve(samples);
    double sum_big = 0, sum_small = 0;
    std::size_t n_big = 0, n_small = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const auto& attrs = combos[i % combos.size()];
        const auto img = cdsprites::render_image(attrs, core::derive_seed(seed, 31, i));
        const auto analysis = analyze_mask(img);
        xs.push_back(mask_descriptor(analysis));
        ys.push_back(static_cast<int>(attrs.shape));
        if (attrs.size == cdsprites::Size::big) {
            sum_big += static_cast<double>(analysis.area);
            ++n_big;
        } else {
            sum_small += static_cast<double>(analysis.area);
            ++n_small;
        }
    }
    const double mean_big = n_big ? sum_big / n_big : 0.0;
    const double mean_small = n_small ? sum_small / n_small : 0.0;
    cls.mean_big_area_ = mean_big;
    cls.mean_small_area_ = mean_small;
    cls.size_threshold_ =
        n_small ? std::sqrt(mean_big * mean_small) : 0.0;  // unused below level 2

    // full-batch gradient descent with heavy-ball momentum on softmax
    // cross-entropy; light L2 keeps the frozen weights bounded
    const std::size_t d = kFeatures;
    cls.weights_.assign(3 * (d + 1), 0.0);
    const double lr = 1.0;
    const double momentum = 0.9;
    const double l2 = 1e-5;
    const std::size_t iters = 3000;
    const double inv_n = 1.0 / static_cast<double>(xs.size());
    std::vector<double> grad(3 * (d + 1));
    std::vector<double> velocity(3 * (d + 1), 0.0);
    for (std::size_t it = 0; it < iters; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double logits[3];
            logits_of(cls.weights_, xs[i], logits);
            const auto p = softmax3(logits);
            for (int k = 0; k < 3; ++k) {
                const double err = p[k] - (ys[i] == k ? 1.0 : 0.0);
                double* g = grad.data() + static_cast<std::size_t>(k) * (d + 1);
                for (std::size_t j = 0; j < d; ++j) g[j] += err * xs[i][j];
                g[d] += err;
            }
        }
        for (std::size_t j = 0; j < cls.weights_.size(); ++j) {
            velocity[j] = momentum * velocity[j] + grad[j] * inv_n + l2 * cls.weights_[j];
            cls.weights_[j] -= lr * velocity[j];
        }
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double logits[3];
        logits_of(cls.weights_, xs[i], logits);
        const int pred = static_cast<int>(
            std::max_element(logits, logits + 3) - logits);
        if (pred == ys[i]) ++correct;
    }
    cls.training_accuracy_ = static_cast<double>(correct) / static_cast<double>(xs.size());
    return cls;
}

Shape ShapeClassifier::classify(const MaskAnalysis& analysis, double* confidence) const {
    const auto x = mask_descriptor(analysis);
    double logits[3];
    logits_of(weights_, x, logits);
    const auto p = softmax3(logits);
    const int best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (confidence != nullptr) *confidence = p[best];
    return static_cast<Shape>(best);
}

void ShapeClassifier::save(const std::string& path) const {
    json j = {
        {"kind", "mmvb-shape-classifier"},
        {"version", version_},
        {"level", level_},
        {"grid", kGrid},
        {"weights", weights_},
        {"size_threshold", size_threshold_},
        {"mean_big_area", mean_big_area_},
        {"mean_small_area", mean_small_area_},
        {"training_accuracy", training_accuracy_},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw io_error("cannot write classifier: " + path);
    out << j.dump(2) << "\n";
}

ShapeClassifier ShapeClassifier::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open classifier: " + path);
    json j = json::parse(in);
    if (j.value("kind", "") != "mmvb-shape-classifier")
        throw io_error("not a shape classifier file: " + path);
    ShapeClassifier cls;
    cls.version_ = j.at("version").get<std::uint32_t>();
    cls.level_ = j.at("level").get<int>();
    cls.weights_ = j.at("weights").get<std::vector<double>>();
    cls.size_threshold_ = j.at("size_threshold").get<double>();
    cls.mean_big_area_ = j.at("mean_big_area").get<double>();
    cls.mean_small_area_ = j.at("mean_small_area").get<double>();
    cls.training_accuracy_ = j.value("training_accuracy", 0.0);
    if (cls.weights_.size() != 3 * (kFeatures + 1))
        throw io_error("classifier weight size mismatch: " + path);
    return cls;
}

}  // namespace mmvb::eval
