#include "mmvb/models/generate.hpp"

#include <algorithm>

#include "mmvb/core/alphabet.hpp"
#include "mmvb/core/error.hpp"

namespace mmvb::models {

using namespace core;
using dist::DiagonalGaussian;

DiagonalGaussian unimodal_posterior(const MultimodalVae& model,
                                    const fusion::ExpertSet& experts, std::size_t source) {
    switch (model.strategy()) {
        case Strategy::mvae:
        case Strategy::mopoe:
            return fusion::poe_fuse_subset(experts, {source}, /*include_prior=*/true);
        case Strategy::mmvae:
            if (!experts.availability[source])
                throw contract_error("unimodal_posterior: source expert missing");
            return experts.experts[source];
        case Strategy::dmvae:
            throw contract_error("unimodal_posterior: use dmvae_unimodal_posterior");
    }
    throw contract_error("unimodal_posterior: unknown strategy");
}

std::pair<DiagonalGaussian, DiagonalGaussian> dmvae_unimodal_posterior(
    const MultimodalVae& model, const MultimodalVae::DmvaeEncoding& enc,
    std::size_t source) {
    if (!enc.shared.availability[source])
        throw contract_error("dmvae_unimodal_posterior: source expert missing");
    fusion::ExpertSet only;
    only.experts = enc.shared.experts;
    only.availability.assign(enc.shared.experts.size(), false);
    only.availability[source] = true;
    return {fusion::poe_fuse(only, /*include_prior=*/true), enc.privates[source]};
}

std::string decode_caption(const MultimodalVae& model, std::span<const double> logits_row) {
    const auto& shapes = model.shapes();
    if (logits_row.size() != shapes.text_dim())
        throw shape_error("decode_caption: wrong logits width");
    std::string out;
    out.reserve(shapes.max_caption_len);
    for (std::size_t p = 0; p < shapes.max_caption_len; ++p) {
        const double* cell = logits_row.data() + p * shapes.alphabet;
        std::size_t best = 0;
        for (std::size_t c = 1; c < shapes.alphabet; ++c)
            if (cell[c] > cell[best]) best = c;
        out.push_back(index_to_char(best));
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

CrossGenerated cross_generate(const MultimodalVae& model, const ModalityBatch& source_batch,
                              std::size_t source_modality, std::size_t target_modality) {
    if (!model.has_modality(source_modality) || !model.has_modality(target_modality))
        throw contract_error("cross_generate: modality not part of this model");
    if (!source_batch.availability[source_modality])
        throw contract_error("cross_generate: source modality missing from batch");

    NoGradGuard no_grad;
    ModalityBatch src = source_batch;
    src.availability.assign(kModalityCount, false);
    src.availability[source_modality] = true;

    Tensor z;
    if (model.strategy() == Strategy::dmvae) {
        auto enc = model.encode_dmvae(src);
        auto [shared, _] = dmvae_unimodal_posterior(model, enc, source_modality);
        // target private code is the prior mean, i.e. zero
        Tensor priv = Tensor::zeros(
            {src.batch_size, model.dmvae_layout().private_dims[target_modality]});
        z = concat_cols({shared.mean, priv});
    } else {
        auto experts = model.encode(src);
        z = unimodal_posterior(model, experts, source_modality).mean;
    }

    CrossGenerated out;
    if (target_modality == kImage) {
        out.output = model.decode_image(z);
    } else {
        out.output = model.decode_text_logits(z);
        out.captions.reserve(src.batch_size);
        const std::size_t width = model.shapes().text_dim();
        for (std::size_t r = 0; r < src.batch_size; ++r)
            out.captions.push_back(
                decode_caption(model, out.output.values().subspan(r * width, width)));
    }
    return out;
}

void joint_generate_traversal(const MultimodalVae& model, std::size_t per_dim_samples,
                              double lo, double hi,
                              const std::function<void(JointSample&&)>& sink) {
    if (per_dim_samples == 0) throw contract_error("traversal: per_dim_samples must be >= 1");
    NoGradGuard no_grad;
    const std::size_t dims = model.traversal_dim();
    const std::size_t img_dim = model.shapes().image_dim;
    const std::size_t txt_dim = model.shapes().text_dim();
    const bool with_image = model.has_modality(kImage);
    const bool with_text = model.has_modality(kText);

    // traversal latent order for dmvae: [shared, private_image, private_text]
    const auto decoder_input = [&](const Tensor& z, std::size_t modality) {
        if (model.strategy() != Strategy::dmvae) return z;
        const auto& layout = model.dmvae_layout();
        std::size_t off = layout.shared_dim;
        for (std::size_t m : model.modalities()) {
            if (m == modality) break;
            off += layout.private_dims[m];
        }
        return concat_cols({slice_cols(z, 0, layout.shared_dim),
                            slice_cols(z, off, layout.private_dims[modality])});
    };

    const std::size_t chunk_rows = 256;
    std::vector<std::pair<std::size_t, double>> coords;  // (dim, value) per row
    coords.reserve(chunk_rows);
    std::vector<double> zbuf;

    const auto flush = [&] {
        if (coords.empty()) return;
        const std::size_t rows = coords.size();
        Tensor z = Tensor::from({rows, dims}, zbuf);
        Tensor img, txt;
        if (with_image) img = model.decode_image(decoder_input(z, kImage));
        if (with_text) txt = model.decode_text_logits(decoder_input(z, kText));
        for (std::size_t r = 0; r < rows; ++r) {
            JointSample s;
            s.dim = coords[r].first;
            s.value = coords[r].second;
            if (with_image) {
                auto row = img.values().subspan(r * img_dim, img_dim);
                s.image.assign(row.begin(), row.end());
            }
            if (with_text)
                s.caption =
                    decode_caption(model, txt.values().subspan(r * txt_dim, txt_dim));
            sink(std::move(s));
        }
        coords.clear();
        zbuf.clear();
    };

    for (std::size_t d = 0; d < dims; ++d) {
        for (std::size_t i = 0; i < per_dim_samples; ++i) {
            const double v =
                lo + (static_cast<double>(i) + 0.5) * (hi - lo) /
                         static_cast<double>(per_dim_samples);
            coords.emplace_back(d, v);
            zbuf.resize(zbuf.size() + dims, 0.0);
            zbuf[(coords.size() - 1) * dims + d] = v;
            if (coords.size() == chunk_rows) flush();
        }
    }
    flush();
}

std::vector<JointSample> joint_generate_traversal(const MultimodalVae& model,
                                                  std::size_t per_dim_samples, double lo,
                                                  double hi) {
    std::vector<JointSample> out;
    out.reserve(model.traversal_dim() * per_dim_samples);
    joint_generate_traversal(model, per_dim_samples, lo, hi,
                             [&](JointSample&& s) { out.push_back(std::move(s)); });
    return out;
}

}  // namespace mmvb::models
