#pragma once

#include <array>
#include <string>
#include <vector>

namespace mmvb::runner {

// Static visualization exports for a trained checkpoint:
//   traversal_grid.png      image decodes, rows = latent dims, columns =
//                           traversal values
//   traversal_captions.txt  caption decodes in the same layout
//   latent_pca.csv          2-D PCA of test-set latent means, one row per
//                           sample with the five attribute columns
void export_visualizations(const std::string& checkpoint_path,
                           const std::string& dataset_dir, const std::string& out_dir,
                           std::size_t traversal_columns = 8, double lo = -6.0,
                           double hi = 6.0, std::size_t max_pca_samples = 1000);

// top-2 principal components of row-major data (rows x cols), exposed for the
// export and its tests
std::vector<std::array<double, 2>> pca_2d(const std::vector<double>& data,
                                          std::size_t rows, std::size_t cols);

// mean silhouette coefficient of 2-D points under integer labels
double silhouette_2d(const std::vector<std::array<double, 2>>& points,
                     const std::vector<int>& labels);

}  // namespace mmvb::runner
