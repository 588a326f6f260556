#include "mmvb/models/vae.hpp"

#include <algorithm>
#include <cmath>

#include "mmvb/core/error.hpp"

namespace mmvb::models {

using namespace core;
using fusion::DmvaeLatentLayout;
using fusion::ExpertSet;

Strategy strategy_from_string(const std::string& s) {
    if (s == "mvae") return Strategy::mvae;
    if (s == "mmvae") return Strategy::mmvae;
    if (s == "mopoe") return Strategy::mopoe;
    if (s == "dmvae") return Strategy::dmvae;
    throw contract_error("unknown model strategy: " + s);
}

std::string strategy_name(Strategy s) {
    switch (s) {
        case Strategy::mvae: return "mvae";
        case Strategy::mmvae: return "mmvae";
        case Strategy::mopoe: return "mopoe";
        case Strategy::dmvae: return "dmvae";
    }
    return "?";
}

void ModalityBatch::validate(const ModelShapes& shapes) const {
    if (availability.size() != kModalityCount)
        throw contract_error("ModalityBatch: availability must cover both modality slots");
    if (availability[kImage]) {
        if (image.cols() != shapes.image_dim || image.rows() != batch_size)
            throw shape_error("ModalityBatch: bad image shape");
        for (double v : image.values())
            if (v < 0.0 || v > 1.0)
                throw contract_error("ModalityBatch: image values outside [0,1]");
    }
    if (availability[kText]) {
        if (text_onehot.cols() != shapes.text_dim() || text_onehot.rows() != batch_size)
            throw shape_error("ModalityBatch: bad text shape");
        if (text_mask.size() != batch_size * shapes.max_caption_len)
            throw shape_error("ModalityBatch: bad text mask size");
        for (std::size_t r = 0; r < batch_size; ++r) {
            bool seen_pad = false;
            for (std::size_t p = 0; p < shapes.max_caption_len; ++p) {
                double s = 0.0;
                for (std::size_t c = 0; c < shapes.alphabet; ++c)
                    s += text_onehot.at(r * shapes.text_dim() + p * shapes.alphabet + c);
                const bool on = text_mask[r * shapes.max_caption_len + p] != 0;
                if (on && seen_pad)
                    throw contract_error("ModalityBatch: mask not a prefix");
                if (!on) seen_pad = true;
                if (on && std::abs(s - 1.0) > 1e-9)
                    throw contract_error("ModalityBatch: masked position is not one-hot");
                if (!on && s != 0.0)
                    throw contract_error("ModalityBatch: padded position is not all-zero");
            }
        }
    }
}

MultimodalVae MultimodalVae::build(Strategy strategy, const ModelShapes& shapes,
                                   std::size_t latent_dim, std::size_t image_hidden,
                                   std::size_t text_hidden,
                                   std::optional<DmvaeLatentLayout> dmvae_layout,
                                   std::uint64_t init_seed,
                                   std::vector<std::size_t> modalities) {
    if (modalities.empty()) throw contract_error("model needs at least one modality");
    for (std::size_t m : modalities)
        if (m >= kModalityCount) throw contract_error("unknown modality index");

    MultimodalVae m;
    m.strategy_ = strategy;
    m.shapes_ = shapes;
    m.latent_dim_ = latent_dim;
    m.modalities_ = std::move(modalities);
    if (strategy == Strategy::dmvae) {
        if (!dmvae_layout) throw contract_error("dmvae model requires a latent layout");
        if (dmvae_layout->private_dims.size() != kModalityCount)
            throw contract_error("dmvae layout needs one private width per modality slot");
        m.layout_ = dmvae_layout;
        m.latent_dim_ = dmvae_layout->shared_dim;
    } else if (latent_dim == 0) {
        throw contract_error("latent_dim must be positive");
    }

    const auto width = [&](std::size_t modality) {
        if (strategy == Strategy::dmvae) return m.layout_->modality_width(modality);
        return m.latent_dim_;
    };

    using Act = MlpSpec::Activation;
    using Heads = MlpSpec::Heads;
    if (m.has_modality(kImage)) {
        m.image_encoder_ = MlpSpec{
            {shapes.image_dim, image_hidden, image_hidden, image_hidden, width(kImage)},
            Act::relu, Heads::gaussian_pair};
        m.image_decoder_ = MlpSpec{
            {width(kImage), image_hidden, image_hidden, image_hidden, shapes.image_dim},
            Act::relu, Heads::single};
        Rng rng_e(derive_seed(init_seed, 1));
        Rng rng_d(derive_seed(init_seed, 2));
        init_mlp_params(m.image_encoder_, m.params_, "image_encoder", rng_e);
        init_mlp_params(m.image_decoder_, m.params_, "image_decoder", rng_d);
    }
    if (m.has_modality(kText)) {
        m.text_encoder_ = MlpSpec{
            {shapes.text_dim(), text_hidden, text_hidden, text_hidden, width(kText)},
            Act::relu, Heads::gaussian_pair};
        m.text_decoder_ = MlpSpec{
            {width(kText), text_hidden, text_hidden, text_hidden, shapes.text_dim()},
            Act::relu, Heads::single};
        Rng rng_e(derive_seed(init_seed, 3));
        Rng rng_d(derive_seed(init_seed, 4));
        init_mlp_params(m.text_encoder_, m.params_, "text_encoder", rng_e);
        init_mlp_params(m.text_decoder_, m.params_, "text_decoder", rng_d);
    }
    return m;
}

bool MultimodalVae::has_modality(std::size_t m) const {
    return std::find(modalities_.begin(), modalities_.end(), m) != modalities_.end();
}

const DmvaeLatentLayout& MultimodalVae::dmvae_layout() const {
    if (!layout_) throw contract_error("model has no dmvae layout");
    return *layout_;
}

std::size_t MultimodalVae::traversal_dim() const {
    if (strategy_ != Strategy::dmvae) return latent_dim_;
    std::size_t t = layout_->shared_dim;
    for (std::size_t m : modalities_) t += layout_->private_dims[m];
    return t;
}

std::size_t MultimodalVae::decoder_input_dim(std::size_t modality) const {
    if (strategy_ == Strategy::dmvae) return layout_->modality_width(modality);
    return latent_dim_;
}

ExpertSet MultimodalVae::encode(const ModalityBatch& batch) const {
    if (strategy_ == Strategy::dmvae)
        throw contract_error("encode(): dmvae models use encode_dmvae()");
    batch.validate(shapes_);
    ExpertSet set;
    set.experts.resize(kModalityCount);
    set.availability.assign(kModalityCount, false);
    if (has_modality(kImage) && batch.availability[kImage]) {
        auto [mean, logvar] =
            mlp_forward_gaussian(image_encoder_, params_, "image_encoder", batch.image);
        set.experts[kImage] = dist::DiagonalGaussian(mean, logvar);
        set.availability[kImage] = true;
    }
    if (has_modality(kText) && batch.availability[kText]) {
        auto [mean, logvar] =
            mlp_forward_gaussian(text_encoder_, params_, "text_encoder", batch.text_onehot);
        set.experts[kText] = dist::DiagonalGaussian(mean, logvar);
        set.availability[kText] = true;
    }
    return set;
}

MultimodalVae::DmvaeEncoding MultimodalVae::encode_dmvae(const ModalityBatch& batch) const {
    if (strategy_ != Strategy::dmvae)
        throw contract_error("encode_dmvae(): model is not dmvae");
    batch.validate(shapes_);
    const std::size_t s = layout_->shared_dim;
    DmvaeEncoding enc;
    enc.shared.experts.resize(kModalityCount);
    enc.shared.availability.assign(kModalityCount, false);
    enc.privates.resize(kModalityCount);
    const auto split = [&](const Tensor& mean, const Tensor& logvar, std::size_t m) {
        const std::size_t p = layout_->private_dims[m];
        enc.shared.experts[m] = dist::DiagonalGaussian(slice_cols(mean, 0, s),
                                                       slice_cols(logvar, 0, s));
        enc.privates[m] = dist::DiagonalGaussian(slice_cols(mean, s, p),
                                                 slice_cols(logvar, s, p));
        enc.shared.availability[m] = true;
    };
    if (has_modality(kImage) && batch.availability[kImage]) {
        auto [mean, logvar] =
            mlp_forward_gaussian(image_encoder_, params_, "image_encoder", batch.image);
        split(mean, logvar, kImage);
    }
    if (has_modality(kText) && batch.availability[kText]) {
        auto [mean, logvar] =
            mlp_forward_gaussian(text_encoder_, params_, "text_encoder", batch.text_onehot);
        split(mean, logvar, kText);
    }
    return enc;
}

Tensor MultimodalVae::decode_image(const Tensor& z) const {
    return sigmoid(mlp_forward(image_decoder_, params_, "image_decoder", z));
}

Tensor MultimodalVae::decode_text_logits(const Tensor& z) const {
    return mlp_forward(text_decoder_, params_, "text_decoder", z);
}

}  // namespace mmvb::models
