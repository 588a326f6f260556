#include "mmvb/runner/visualize.hpp"

#include <cmath>
#include <map>
#include <filesystem>
#include <fstream>

#include "mmvb/core/error.hpp"
#include "mmvb/core/rng.hpp"
#include "mmvb/eval/coherence.hpp"
#include "mmvb/models/generate.hpp"
#include "mmvb/runner/train.hpp"

namespace mmvb::runner {

namespace fs = std::filesystem;
using namespace models;
using cdsprites::Rgb8Image;

std::vector<std::array<double, 2>> pca_2d(const std::vector<double>& data,
                                          std::size_t rows, std::size_t cols) {
    if (data.size() != rows * cols) throw contract_error("pca_2d: bad data size");
    if (rows < 2) throw contract_error("pca_2d: need at least two rows");
    std::vector<double> mean(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) mean[c] += data[r * cols + c];
    for (double& m : mean) m /= static_cast<double>(rows);

    const auto matvec = [&](const std::vector<double>& v, std::vector<double>& out) {
        // out = X^T (X v) with X centered, without materializing X
        std::vector<double> xv(rows, 0.0);
        double mv = 0.0;
        for (std::size_t c = 0; c < cols; ++c) mv += mean[c] * v[c];
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            const double* row = data.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += row[c] * v[c];
            xv[r] = acc - mv;
        }
        std::fill(out.begin(), out.end(), 0.0);
        double xv_sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) xv_sum += xv[r];
        for (std::size_t r = 0; r < rows; ++r) {
            const double* row = data.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * xv[r];
        }
        for (std::size_t c = 0; c < cols; ++c) out[c] -= mean[c] * xv_sum;
    };

    core::Rng rng(20240817);
    std::vector<std::vector<double>> components;
    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> v(cols);
        for (double& x : v) x = rng.normal();
        std::vector<double> next(cols);
        for (int iter = 0; iter < 150; ++iter) {
            // orthogonalize against previous components
            for (const auto& prev : components) {
                double dot = 0.0;
                for (std::size_t c = 0; c < cols; ++c) dot += v[c] * prev[c];
                for (std::size_t c = 0; c < cols; ++c) v[c] -= dot * prev[c];
            }
            matvec(v, next);
            double norm = 0.0;
            for (double x : next) norm += x * x;
            norm = std::sqrt(norm);
            if (norm < 1e-30) break;
            for (std::size_t c = 0; c < cols; ++c) v[c] = next[c] / norm;
        }
        components.push_back(v);
    }

    std::vector<std::array<double, 2>> scores(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (int comp = 0; comp < 2; ++comp) {
            double acc = 0.0;
            const double* row = data.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c)
                acc += (row[c] - mean[c]) * components[comp][c];
            scores[r][comp] = acc;
        }
    }
    return scores;
}

double silhouette_2d(const std::vector<std::array<double, 2>>& points,
                     const std::vector<int>& labels) {
    const std::size_t n = points.size();
    if (labels.size() != n || n < 2) throw contract_error("silhouette_2d: bad inputs");
    const auto dist = [&](std::size_t i, std::size_t j) {
        const double dx = points[i][0] - points[j][0];
        const double dy = points[i][1] - points[j][1];
        return std::sqrt(dx * dx + dy * dy);
    };
    std::map<int, std::size_t> cluster_sizes;
    for (int l : labels) cluster_sizes[l]++;
    if (cluster_sizes.size() < 2) throw contract_error("silhouette_2d: need >= 2 clusters");

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::map<int, double> sums;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[labels[j]] += dist(i, j);
        const std::size_t own = cluster_sizes[labels[i]];
        if (own <= 1) continue;  // silhouette 0 by convention
        const double a = sums[labels[i]] / static_cast<double>(own - 1);
        double b = 1e300;
        for (const auto& [label, sum] : sums) {
            if (label == labels[i]) continue;
            b = std::min(b, sum / static_cast<double>(cluster_sizes[label]));
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

namespace {

Rgb8Image sheet_from_rows(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    constexpr int cell = 64, gutter = 1;
    const std::size_t dims = rows.size() / cols;
    Rgb8Image sheet;
    sheet.width = static_cast<std::uint32_t>(cols * (cell + gutter) - gutter);
    sheet.height = static_cast<std::uint32_t>(dims * (cell + gutter) - gutter);
    sheet.pixels.assign(static_cast<std::size_t>(sheet.width) * sheet.height * 3, 32);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t d = i / cols, c = i % cols;
        const std::size_t x0 = c * (cell + gutter), y0 = d * (cell + gutter);
        for (int y = 0; y < cell; ++y) {
            for (int x = 0; x < cell; ++x) {
                const std::size_t src = (static_cast<std::size_t>(y) * cell + x) * 3;
                const std::size_t dst =
                    ((y0 + y) * sheet.width + (x0 + x)) * 3;
                for (int ch = 0; ch < 3; ++ch)
                    sheet.pixels[dst + ch] = static_cast<std::uint8_t>(
                        std::lround(255.0 * std::clamp(rows[i][src + ch], 0.0, 1.0)));
            }
        }
    }
    return sheet;
}

}  // namespace

void export_visualizations(const std::string& checkpoint_path,
                           const std::string& dataset_dir, const std::string& out_dir,
                           std::size_t traversal_columns, double lo, double hi,
                           std::size_t max_pca_samples) {
    fs::create_directories(out_dir);
    auto model = load_checkpoint(checkpoint_path);
    const int level = checkpoint_level(checkpoint_path);

    // (a) traversal sheets: rows = latent dims, columns = traversal values
    std::vector<std::vector<double>> image_cells;
    std::vector<std::string> captions;
    joint_generate_traversal(model, traversal_columns, lo, hi,
                             [&](JointSample&& s) {
                                 image_cells.push_back(std::move(s.image));
                                 captions.push_back(std::move(s.caption));
                             });
    cdsprites::write_png_rgb8((fs::path(out_dir) / "traversal_grid.png").string(),
                              sheet_from_rows(image_cells, traversal_columns));
    {
        std::ofstream txt(fs::path(out_dir) / "traversal_captions.txt", std::ios::trunc);
        for (std::size_t i = 0; i < captions.size(); ++i) {
            txt << captions[i];
            txt << ((i + 1) % traversal_columns == 0 ? '\n' : '\t');
        }
        if (!txt) throw io_error("cannot write traversal captions under " + out_dir);
    }

    // (b) 2-D PCA of test-set latent means with attribute columns
    const std::string level_dir = cdsprites::level_dir_path(dataset_dir, level);
    auto test = eval::TestSet::open(level_dir);
    if (test.entries.size() > max_pca_samples) test.entries.resize(max_pca_samples);
    const std::size_t n = test.entries.size();
    std::vector<double> latents;
    std::size_t latent_cols = 0;
    {
        core::NoGradGuard no_grad;
        const std::size_t chunk = 256;
        for (std::size_t begin = 0; begin < n; begin += chunk) {
            const std::size_t end = std::min(n, begin + chunk);
            auto batch = eval::batch_from_entries(test, begin, end, true, false);
            core::Tensor mean;
            if (model.strategy() == Strategy::dmvae) {
                auto enc = model.encode_dmvae(batch);
                auto [shared, priv] = dmvae_unimodal_posterior(model, enc, kImage);
                mean = core::concat_cols({shared.mean, priv.mean});
            } else {
                auto experts = model.encode(batch);
                mean = unimodal_posterior(model, experts, kImage).mean;
            }
            latent_cols = mean.cols();
            latents.insert(latents.end(), mean.values().begin(), mean.values().end());
        }
    }
    const auto scores = pca_2d(latents, n, latent_cols);
    {
        std::ofstream csv(fs::path(out_dir) / "latent_pca.csv", std::ios::trunc);
        csv << "x,y,shape,size,color,quadrant,background\n";
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = test.entries[i].attrs;
            csv << scores[i][0] << "," << scores[i][1] << "," << to_word(a.shape) << ","
                << to_word(a.size) << "," << to_word(a.color) << ",\""
                << to_word(a.quadrant) << "\"," << to_word(a.background) << "\n";
        }
        if (!csv) throw io_error("cannot write latent_pca.csv under " + out_dir);
    }
}

}  // namespace mmvb::runner
