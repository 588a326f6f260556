#pragma once

#include <string>
#include <vector>

#include "mmvb/core/rng.hpp"
#include "mmvb/models/vae.hpp"

namespace mmvb::models {

struct ObjectiveConfig {
    double beta = 1.0;                              // KL weight
    std::vector<double> likelihood_weights = {1.0, 1.0};  // indexed by modality
    bool subsample_unimodal = true;                 // MVAE subset training
    std::size_t importance_samples = 16;            // K, log-lik estimation only
    void validate() const;
};

struct LossTerm {
    std::string name;
    double value;
};

// Every objective reports the scalar loss (minimized) plus named parts. The
// aggregates "kl" and "recon.<modality>" always satisfy
//   total == beta * kl - sum_m lambda_m * recon.<m>
// to 1e-9; detailed per-term entries (per subset, per expert, self/cross) sit
// alongside them.
struct LossReport {
    core::Tensor loss;  // scalar, connected to the tape
    double total = 0.0;
    std::vector<LossTerm> terms;

    double term(const std::string& name) const;
    bool has_term(const std::string& name) const;
    std::size_t count_suffix(const std::string& suffix) const;
};

// Per-row reconstruction log-likelihood (batch x 1). Images score a
// unit-variance Gaussian with the constant dropped: -0.5 * sum (x - xhat)^2;
// captions score the masked per-position categorical log-likelihood. `decoded`
// must already be sigmoid probabilities for images / raw logits for text.
core::Tensor recon_log_likelihood(std::size_t modality, const MultimodalVae& model,
                                  const core::Tensor& decoded, const ModalityBatch& target);

// Plain single-sample ELBO for an already-fused posterior, reconstructing the
// given modalities: total = mean over rows of [beta*KL - sum lambda*recon].
LossReport elbo(const MultimodalVae& model, const dist::DiagonalGaussian& q,
                const ModalityBatch& batch, const std::vector<std::size_t>& recon_modalities,
                const ObjectiveConfig& cfg, core::Rng& rng);

LossReport mvae_objective(const MultimodalVae& model, const ModalityBatch& batch,
                          const ObjectiveConfig& cfg, core::Rng& rng);
LossReport mmvae_objective(const MultimodalVae& model, const ModalityBatch& batch,
                           const ObjectiveConfig& cfg, core::Rng& rng);
LossReport mopoe_objective(const MultimodalVae& model, const ModalityBatch& batch,
                           const ObjectiveConfig& cfg, core::Rng& rng);
LossReport dmvae_objective(const MultimodalVae& model, const ModalityBatch& batch,
                           const ObjectiveConfig& cfg, core::Rng& rng);

// Dispatch on model.strategy().
LossReport objective(const MultimodalVae& model, const ModalityBatch& batch,
                     const ObjectiveConfig& cfg, core::Rng& rng);

std::string modality_label(std::size_t m);

}  // namespace mmvb::models
