#include "mmvb/models/loglik.hpp"

#include <cmath>

#include "mmvb/core/error.hpp"
#include "mmvb/fusion/fusion.hpp"
#include "mmvb/models/generate.hpp"

namespace mmvb::models {

using namespace core;
using dist::DiagonalGaussian;

namespace {

constexpr double kLogTwoPi = 1.8378770664093454836;

// Streaming log-sum-exp per batch row; memory independent of K.
struct RunningLse {
    std::vector<double> max_w;
    std::vector<double> sum_exp;
    explicit RunningLse(std::size_t rows)
        : max_w(rows, -std::numeric_limits<double>::infinity()), sum_exp(rows, 0.0) {}
    void update(std::size_t row, double w) {
        if (w <= max_w[row]) {
            sum_exp[row] += std::exp(w - max_w[row]);
        } else {
            sum_exp[row] = sum_exp[row] * std::exp(max_w[row] - w) + 1.0;
            max_w[row] = w;
        }
    }
    double mean_estimate(std::size_t k) const {
        double acc = 0.0;
        for (std::size_t r = 0; r < max_w.size(); ++r)
            acc += max_w[r] + std::log(sum_exp[r]) - std::log(static_cast<double>(k));
        return acc / static_cast<double>(max_w.size());
    }
};

Tensor draw(const DiagonalGaussian& q, Rng& rng) {
    const std::size_t n = q.mean.numel();
    std::vector<double> z(n);
    const auto mu = q.mean.values();
    const auto lv = q.log_variance.values();
    for (std::size_t i = 0; i < n; ++i)
        z[i] = mu[i] + std::exp(0.5 * lv[i]) * rng.normal();
    return Tensor::from(q.mean.shape(), std::move(z));
}

void add_log_prob_rows(const DiagonalGaussian& q, const Tensor& z, double sign,
                       std::vector<double>& acc) {
    const std::size_t rows = q.batch(), dim = q.dim();
    const auto mu = q.mean.values();
    const auto lv = q.log_variance.values();
    const auto zv = z.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double lp = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const std::size_t i = r * dim + d;
            const double diff = zv[i] - mu[i];
            lp += -0.5 * (kLogTwoPi + lv[i] + diff * diff * std::exp(-lv[i]));
        }
        acc[r] += sign * lp;
    }
}

void add_std_log_prob_rows(const Tensor& z, double sign, std::vector<double>& acc) {
    const std::size_t rows = z.rows(), dim = z.cols();
    const auto zv = z.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double lp = 0.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double v = zv[r * dim + d];
            lp += -0.5 * (kLogTwoPi + v * v);
        }
        acc[r] += sign * lp;
    }
}

void add_image_recon_rows(const MultimodalVae& model, const Tensor& z,
                          const ModalityBatch& batch, std::vector<double>& acc) {
    Tensor decoded = model.decode_image(z);
    const std::size_t rows = decoded.rows(), dim = decoded.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const auto dv = decoded.values();
        const auto tv = batch.image.values();
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = dv[r * dim + d] - tv[r * dim + d];
            s += diff * diff;
        }
        acc[r] += -0.5 * s;
    }
}

void add_text_recon_rows(const MultimodalVae& model, const Tensor& z,
                         const ModalityBatch& batch, std::vector<double>& acc) {
    Tensor logits = model.decode_text_logits(z);
    const auto& shapes = model.shapes();
    const std::size_t rows = logits.rows();
    const auto lv = logits.values();
    const auto tv = batch.text_onehot.values();
    for (std::size_t r = 0; r < rows; ++r) {
        double ll = 0.0;
        for (std::size_t p = 0; p < shapes.max_caption_len; ++p) {
            if (batch.text_mask[r * shapes.max_caption_len + p] == 0) continue;
            const std::size_t base = r * shapes.text_dim() + p * shapes.alphabet;
            double mx = lv[base];
            for (std::size_t c = 1; c < shapes.alphabet; ++c)
                mx = std::max(mx, lv[base + c]);
            double se = 0.0, target_logit = 0.0;
            for (std::size_t c = 0; c < shapes.alphabet; ++c) {
                se += std::exp(lv[base + c] - mx);
                if (tv[base + c] > 0.5) target_logit = lv[base + c];
            }
            ll += target_logit - mx - std::log(se);
        }
        acc[r] += ll;
    }
}

double lse(const std::vector<double>& xs) {
    double mx = xs[0];
    for (double x : xs) mx = std::max(mx, x);
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

}  // namespace

LogLikEstimates estimate_log_likelihoods(const MultimodalVae& model,
                                         const ModalityBatch& batch, std::size_t k,
                                         Rng& rng) {
    if (k < 1) throw contract_error("estimate_log_likelihoods: K must be >= 1");
    if (!model.has_modality(kImage) || !model.has_modality(kText))
        throw contract_error("estimate_log_likelihoods: needs an image+text model");
    if (!batch.availability[kImage] || !batch.availability[kText])
        throw contract_error("estimate_log_likelihoods: needs both modalities in the batch");

    NoGradGuard no_grad;
    const std::size_t b = batch.batch_size;
    RunningLse marginal(b), joint(b), conditional(b);

    if (model.strategy() == Strategy::dmvae) {
        auto enc = model.encode_dmvae(batch);
        auto [sh_img, p_img] = dmvae_unimodal_posterior(model, enc, kImage);
        auto [sh_txt, p_txt] = dmvae_unimodal_posterior(model, enc, kText);
        auto fused = fusion::dmvae_fuse(enc.shared, model.dmvae_layout(), enc.privates);
        const std::size_t pi_dim = model.dmvae_layout().private_dims[kImage];

        for (std::size_t s = 0; s < k; ++s) {
            std::vector<double> w(b, 0.0);
            // marginal: proposal [shared-from-image, private-image]
            Tensor z_sh = draw(sh_img, rng);
            Tensor z_pi = draw(p_img, rng);
            add_image_recon_rows(model, concat_cols({z_sh, z_pi}), batch, w);
            add_std_log_prob_rows(z_sh, +1.0, w);
            add_std_log_prob_rows(z_pi, +1.0, w);
            add_log_prob_rows(sh_img, z_sh, -1.0, w);
            add_log_prob_rows(p_img, z_pi, -1.0, w);
            for (std::size_t r = 0; r < b; ++r) marginal.update(r, w[r]);

            // joint: proposal [fused shared, private-image, private-text]
            std::fill(w.begin(), w.end(), 0.0);
            Tensor zj_sh = draw(fused.shared, rng);
            Tensor zj_pi = draw(fused.privates[kImage], rng);
            Tensor zj_pt = draw(fused.privates[kText], rng);
            add_image_recon_rows(model, concat_cols({zj_sh, zj_pi}), batch, w);
            add_text_recon_rows(model, concat_cols({zj_sh, zj_pt}), batch, w);
            add_std_log_prob_rows(zj_sh, +1.0, w);
            add_std_log_prob_rows(zj_pi, +1.0, w);
            add_std_log_prob_rows(zj_pt, +1.0, w);
            add_log_prob_rows(fused.shared, zj_sh, -1.0, w);
            add_log_prob_rows(fused.privates[kImage], zj_pi, -1.0, w);
            add_log_prob_rows(fused.privates[kText], zj_pt, -1.0, w);
            for (std::size_t r = 0; r < b; ++r) joint.update(r, w[r]);

            // conditional: shared from text, image private from the prior
            // (its p/q factors cancel)
            std::fill(w.begin(), w.end(), 0.0);
            Tensor zc_sh = draw(sh_txt, rng);
            Tensor zc_pi = draw(DiagonalGaussian::standard(b, pi_dim), rng);
            add_image_recon_rows(model, concat_cols({zc_sh, zc_pi}), batch, w);
            add_std_log_prob_rows(zc_sh, +1.0, w);
            add_log_prob_rows(sh_txt, zc_sh, -1.0, w);
            for (std::size_t r = 0; r < b; ++r) conditional.update(r, w[r]);
        }
    } else {
        auto experts = model.encode(batch);
        auto q_img = unimodal_posterior(model, experts, kImage);
        auto q_txt = unimodal_posterior(model, experts, kText);

        // joint proposal components: a single PoE for mvae, uniform mixtures
        // over experts (mmvae) or subset posteriors (mopoe)
        std::vector<DiagonalGaussian> joint_components;
        if (model.strategy() == Strategy::mvae) {
            joint_components.push_back(fusion::poe_fuse(experts, true));
        } else if (model.strategy() == Strategy::mmvae) {
            for (std::size_t m : model.modalities())
                joint_components.push_back(experts.experts[m]);
        } else {
            auto lattice = fusion::enumerate_subsets(model.modalities().size());
            for (const auto& positions : lattice.subsets) {
                std::vector<std::size_t> subset;
                for (std::size_t pos : positions) subset.push_back(model.modalities()[pos]);
                joint_components.push_back(fusion::poe_fuse_subset(experts, subset, true));
            }
        }
        const double log_comp_count =
            std::log(static_cast<double>(joint_components.size()));

        for (std::size_t s = 0; s < k; ++s) {
            std::vector<double> w(b, 0.0);
            Tensor z1 = draw(q_img, rng);
            add_image_recon_rows(model, z1, batch, w);
            add_std_log_prob_rows(z1, +1.0, w);
            add_log_prob_rows(q_img, z1, -1.0, w);
            for (std::size_t r = 0; r < b; ++r) marginal.update(r, w[r]);

            // stratify mixture components over samples
            std::fill(w.begin(), w.end(), 0.0);
            Tensor zj = draw(joint_components[s % joint_components.size()], rng);
            add_image_recon_rows(model, zj, batch, w);
            add_text_recon_rows(model, zj, batch, w);
            add_std_log_prob_rows(zj, +1.0, w);
            if (joint_components.size() == 1) {
                add_log_prob_rows(joint_components[0], zj, -1.0, w);
            } else {
                // log q_mix(z) = lse_m log q_m(z) - log M, per row
                std::vector<std::vector<double>> lps(
                    joint_components.size(), std::vector<double>(b, 0.0));
                for (std::size_t c = 0; c < joint_components.size(); ++c)
                    add_log_prob_rows(joint_components[c], zj, +1.0, lps[c]);
                std::vector<double> per_comp(joint_components.size());
                for (std::size_t r = 0; r < b; ++r) {
                    for (std::size_t c = 0; c < joint_components.size(); ++c)
                        per_comp[c] = lps[c][r];
                    w[r] -= lse(per_comp) - log_comp_count;
                }
            }
            for (std::size_t r = 0; r < b; ++r) joint.update(r, w[r]);

            std::fill(w.begin(), w.end(), 0.0);
            Tensor zc = draw(q_txt, rng);
            add_image_recon_rows(model, zc, batch, w);
            add_std_log_prob_rows(zc, +1.0, w);
            add_log_prob_rows(q_txt, zc, -1.0, w);
            for (std::size_t r = 0; r < b; ++r) conditional.update(r, w[r]);
        }
    }

    LogLikEstimates out;
    out.logp_x1 = marginal.mean_estimate(k);
    out.logp_joint = joint.mean_estimate(k);
    out.logp_x1_given_x2 = conditional.mean_estimate(k);
    out.importance_samples = k;
    return out;
}

}  // namespace mmvb::models
