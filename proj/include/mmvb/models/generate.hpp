#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmvb/models/vae.hpp"

namespace mmvb::models {

// Unimodal posterior used for cross-generation and the IWAE proposals:
// mvae/mopoe fuse the source expert with the prior, mmvae uses the raw expert.
dist::DiagonalGaussian unimodal_posterior(const MultimodalVae& model,
                                          const fusion::ExpertSet& experts,
                                          std::size_t source);
// dmvae: (shared expert fused with the prior, private posterior of the source)
std::pair<dist::DiagonalGaussian, dist::DiagonalGaussian> dmvae_unimodal_posterior(
    const MultimodalVae& model, const MultimodalVae::DmvaeEncoding& enc,
    std::size_t source);

struct CrossGenerated {
    Tensor output;                      // image probabilities or text logits
    std::vector<std::string> captions;  // filled when the target is text
};

// Encode the source modality, take the posterior mean as z (dmvae: target
// private comes from the prior mean, i.e. zero) and decode the target.
// Deterministic: no sampling anywhere.
CrossGenerated cross_generate(const MultimodalVae& model, const ModalityBatch& source_batch,
                              std::size_t source_modality, std::size_t target_modality);

// argmax per position over the alphabet, trailing spaces trimmed
std::string decode_caption(const MultimodalVae& model, std::span<const double> logits_row);

struct JointSample {
    std::size_t dim = 0;
    double value = 0.0;
    std::vector<double> image;  // image_dim values in [0,1]
    std::string caption;
};

// For every latent dimension d, per_dim_samples values evenly spread over
// [lo, hi] (midpoints of equal bins, so one sample sits at the midpoint),
// placed at dim d with all other dims zero; both decoders applied. Streams
// latent_dim * per_dim_samples samples through the sink.
void joint_generate_traversal(const MultimodalVae& model, std::size_t per_dim_samples,
                              double lo, double hi,
                              const std::function<void(JointSample&&)>& sink);

// Convenience collector for small traversals.
std::vector<JointSample> joint_generate_traversal(const MultimodalVae& model,
                                                  std::size_t per_dim_samples, double lo,
                                                  double hi);

}  // namespace mmvb::models
