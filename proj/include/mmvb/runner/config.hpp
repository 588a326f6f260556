#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmvb/models/vae.hpp"

namespace mmvb::runner {

// Flat key/value experiment configuration ("key: value" lines, '#' comments,
// lists in brackets). Unknown keys are rejected. Defaults follow the shipped
// benchmark setup: lr 1e-4, batch 32, beta 1, latent grid {16,24,32}, dmvae
// private 10 with shared grid {10,16,24}, epochs 150 for levels 1-2 and 250
// for levels 3-5, traversal 1000 samples per dim over [-6, 6].
struct ExperimentConfig {
    // required
    std::string model;        // mvae | mmvae | mopoe | dmvae
    std::string dataset_dir;  // root containing level_N/
    int level = 0;            // 1..5

    // grid axes (single value = no grid)
    std::vector<std::size_t> latent_dim = {16, 24, 32};
    std::vector<std::size_t> dmvae_shared_dim = {10, 16, 24};
    std::size_t dmvae_private_dim = 10;

    double beta = 1.0;
    std::size_t batch_size = 32;
    std::size_t epochs = 0;  // 0 = level default (150 for 1-2, 250 for 3-5)
    double learning_rate = 1e-4;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    double likelihood_weight_image = 1.0;
    double likelihood_weight_text = 1.0;
    bool subsample_unimodal = true;
    std::size_t eval_importance_samples = 0;  // 0 = skip log-likelihoods
    std::size_t eval_samples = 0;             // 0 = whole test split
    std::size_t traversal_per_dim = 1000;
    double traversal_lo = -6.0;
    double traversal_hi = 6.0;
    std::size_t image_hidden = 256;
    std::size_t text_hidden = 192;
    std::size_t checkpoint_every = 25;
    // config no-op kept for compatibility with the published setup; the MLP
    // text networks have no dropout
    double dropout = 0.0;

    std::size_t epochs_effective() const {
        if (epochs > 0) return epochs;
        return level <= 2 ? 150 : 250;
    }
    models::Strategy strategy() const { return models::strategy_from_string(model); }
    // the grid axis: latent_dim, or dmvae_shared_dim for dmvae models
    const std::vector<std::size_t>& axis_values() const {
        return strategy() == models::Strategy::dmvae ? dmvae_shared_dim : latent_dim;
    }

    void validate() const;  // range checks with bounds in the message
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Output root: MMVB_OUT_ROOT env var, falling back to "runs".
std::string default_output_root();

}  // namespace mmvb::runner
