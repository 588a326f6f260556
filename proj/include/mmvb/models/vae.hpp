#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmvb/core/mlp.hpp"
#include "mmvb/fusion/fusion.hpp"

namespace mmvb::models {

using core::Tensor;

enum class Strategy { mvae, mmvae, mopoe, dmvae };

Strategy strategy_from_string(const std::string& s);
std::string strategy_name(Strategy s);

// Modality indices are fixed: image first, text second.
inline constexpr std::size_t kImage = 0;
inline constexpr std::size_t kText = 1;
inline constexpr std::size_t kModalityCount = 2;

struct ModelShapes {
    std::size_t image_dim = 64 * 64 * 3;  // flattened RGB in [0,1]
    std::size_t max_caption_len = 45;
    std::size_t alphabet = 27;  // 'a'..'z' + space
    std::size_t text_dim() const { return max_caption_len * alphabet; }
};

// One training batch. Caption rows are one-hot for positions < length and
// all-zero beyond; the mask mirrors that, so padded positions contribute
// nothing to any likelihood.
struct ModalityBatch {
    Tensor image;        // batch x image_dim
    Tensor text_onehot;  // batch x (max_caption_len * alphabet)
    std::vector<std::uint8_t> text_mask;  // batch * max_caption_len
    std::vector<bool> availability = {true, true};
    std::size_t batch_size = 0;

    void validate(const ModelShapes& shapes) const;
};

// Encoder/decoder stacks for the model's modalities plus the fusion strategy
// tag. All four strategies share this container; dmvae additionally carries
// the shared/private layout and wider encoder heads. The modality universe is
// {image, text} by default; a single-modality universe is allowed (the M=1
// degenerate case) and skips the other modality's networks entirely.
class MultimodalVae {
public:
    static MultimodalVae build(Strategy strategy, const ModelShapes& shapes,
                               std::size_t latent_dim, std::size_t image_hidden,
                               std::size_t text_hidden,
                               std::optional<fusion::DmvaeLatentLayout> dmvae_layout,
                               std::uint64_t init_seed,
                               std::vector<std::size_t> modalities = {kImage, kText});

    Strategy strategy() const { return strategy_; }
    const ModelShapes& shapes() const { return shapes_; }
    std::size_t latent_dim() const { return latent_dim_; }
    const std::vector<std::size_t>& modalities() const { return modalities_; }
    bool has_modality(std::size_t m) const;
    const fusion::DmvaeLatentLayout& dmvae_layout() const;
    // dimensionality of the generative latent space: latent_dim for the fused
    // models, shared + sum of privates for dmvae
    std::size_t traversal_dim() const;

    core::ParamSet& params() { return params_; }
    const core::ParamSet& params() const { return params_; }

    // Per-modality Gaussian experts for the available modalities.
    fusion::ExpertSet encode(const ModalityBatch& batch) const;

    struct DmvaeEncoding {
        fusion::ExpertSet shared;                         // width shared_dim
        std::vector<dist::DiagonalGaussian> privates;     // width private_dims[m]
    };
    DmvaeEncoding encode_dmvae(const ModalityBatch& batch) const;

    // Decoders. Image output is passed through a sigmoid (values in [0,1]);
    // text output is raw per-position logits over the alphabet.
    Tensor decode_image(const Tensor& z) const;
    Tensor decode_text_logits(const Tensor& z) const;

    // dmvae decoder input is [shared, private_m]
    std::size_t decoder_input_dim(std::size_t modality) const;

private:
    Strategy strategy_ = Strategy::mvae;
    ModelShapes shapes_;
    std::size_t latent_dim_ = 0;
    std::vector<std::size_t> modalities_;
    std::optional<fusion::DmvaeLatentLayout> layout_;
    core::MlpSpec image_encoder_, image_decoder_, text_encoder_, text_decoder_;
    core::ParamSet params_;
};

}  // namespace mmvb::models
