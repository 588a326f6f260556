#include "mmvb/models/objectives.hpp"

#include <algorithm>

#include "mmvb/core/error.hpp"
#include "mmvb/dist/gaussian.hpp"
#include "mmvb/kernels/kernels.hpp"

namespace mmvb::models {

using namespace core;
using dist::DiagonalGaussian;
using dist::kl_to_standard_normal;
using dist::reparam_sample;

std::string modality_label(std::size_t m) { return m == kImage ? "image" : "text"; }

void ObjectiveConfig::validate() const {
    if (beta <= 0.0) throw contract_error("ObjectiveConfig: beta must be positive");
    if (likelihood_weights.size() != kModalityCount)
        throw contract_error("ObjectiveConfig: one likelihood weight per modality");
    if (importance_samples < 1)
        throw contract_error("ObjectiveConfig: importance_samples must be >= 1");
}

double LossReport::term(const std::string& name) const {
    for (const auto& t : terms)
        if (t.name == name) return t.value;
    throw contract_error("LossReport: no term named " + name);
}

bool LossReport::has_term(const std::string& name) const {
    for (const auto& t : terms)
        if (t.name == name) return true;
    return false;
}

std::size_t LossReport::count_suffix(const std::string& suffix) const {
    std::size_t n = 0;
    for (const auto& t : terms)
        if (t.name.size() >= suffix.size() &&
            t.name.compare(t.name.size() - suffix.size(), suffix.size(), suffix) == 0)
            ++n;
    return n;
}

namespace {

double value_mean(const Tensor& t) {
    return kern::active().sum(t.values().data(), t.numel()) /
           static_cast<double>(t.numel());
}

Tensor decode_for(const MultimodalVae& model, std::size_t modality, const Tensor& z) {
    return modality == kImage ? model.decode_image(z) : model.decode_text_logits(z);
}

Tensor target_tensor(const ModalityBatch& batch, std::size_t modality) {
    return modality == kImage ? batch.image : batch.text_onehot;
}

Tensor recon_rows(std::size_t modality, const MultimodalVae& model, const Tensor& decoded,
                  const Tensor& target) {
    if (modality == kImage) {
        Tensor diff = sub(decoded, target);
        return scale(row_sum(mul(diff, diff)), -0.5);
    }
    Tensor ll = log_softmax_groups(decoded, model.shapes().alphabet);
    return row_sum(mul(ll, target));
}

// Accumulates terms plus the uniform aggregates. `weight` scales a part's
// contribution to the aggregate (subset averaging, stratum fractions).
struct ReportBuilder {
    std::vector<LossTerm> terms;
    double agg_kl = 0.0;
    double agg_recon[kModalityCount] = {0.0, 0.0};

    void part(const std::string& name, double value) { terms.push_back({name, value}); }
    void kl_part(const std::string& name, double value, double weight) {
        terms.push_back({name, value});
        agg_kl += weight * value;
    }
    void recon_part(const std::string& name, std::size_t modality, double value,
                    double weight) {
        terms.push_back({name, value});
        agg_recon[modality] += weight * value;
    }

    LossReport finish(Tensor loss) {
        LossReport r;
        r.loss = std::move(loss);
        r.total = r.loss.item();
        r.terms = std::move(terms);
        r.terms.push_back({"kl", agg_kl});
        for (std::size_t m = 0; m < kModalityCount; ++m)
            r.terms.push_back({"recon." + modality_label(m), agg_recon[m]});
        r.terms.push_back({"total", r.total});
        return r;
    }
};

struct ElboCore {
    Tensor loss_rows;  // rows x 1
    double kl_mean = 0.0;
    std::vector<std::pair<std::size_t, double>> recon_means;
};

// One reparameterized sample, KL against the standard normal, reconstruction
// of the requested modalities. Targets may be row-subsetted via `rows`.
ElboCore elbo_core(const MultimodalVae& model, const DiagonalGaussian& q,
                   const ModalityBatch& batch,
                   const std::vector<std::size_t>& recon_modalities,
                   const ObjectiveConfig& cfg, Rng& rng,
                   const std::vector<std::size_t>* rows = nullptr) {
    Tensor noise = Tensor::randn({q.batch(), q.dim()}, rng);
    Tensor z = reparam_sample(q, noise).z;
    Tensor kl = kl_to_standard_normal(q);
    ElboCore out;
    out.loss_rows = scale(kl, cfg.beta);
    out.kl_mean = value_mean(kl);
    for (std::size_t m : recon_modalities) {
        if (!model.has_modality(m))
            throw contract_error("elbo: modality not part of this model");
        Tensor target = target_tensor(batch, m);
        if (rows != nullptr) target = take_rows(target, *rows);
        Tensor rec = recon_rows(m, model, decode_for(model, m, z), target);
        out.loss_rows = sub(out.loss_rows, scale(rec, cfg.likelihood_weights[m]));
        out.recon_means.emplace_back(m, value_mean(rec));
    }
    return out;
}

void require_complete(const MultimodalVae& model, const ModalityBatch& batch,
                      const char* objective_name) {
    for (std::size_t m : model.modalities())
        if (!batch.availability[m])
            throw contract_error(std::string(objective_name) +
                                 ": modality missing during training (trains on "
                                 "complete tuples): " +
                                 modality_label(m));
}

}  // namespace

Tensor recon_log_likelihood(std::size_t modality, const MultimodalVae& model,
                            const Tensor& decoded, const ModalityBatch& target) {
    return recon_rows(modality, model, decoded, target_tensor(target, modality));
}

LossReport elbo(const MultimodalVae& model, const DiagonalGaussian& q,
                const ModalityBatch& batch, const std::vector<std::size_t>& recon_modalities,
                const ObjectiveConfig& cfg, Rng& rng) {
    cfg.validate();
    auto core = elbo_core(model, q, batch, recon_modalities, cfg, rng);
    ReportBuilder rb;
    rb.kl_part("kl.posterior", core.kl_mean, 1.0);
    for (auto& [m, v] : core.recon_means)
        rb.recon_part("recon_term." + modality_label(m), m, v, 1.0);
    return rb.finish(mean_all(core.loss_rows));
}

LossReport mvae_objective(const MultimodalVae& model, const ModalityBatch& batch,
                          const ObjectiveConfig& cfg, Rng& rng) {
    if (model.strategy() != Strategy::mvae)
        throw contract_error("mvae_objective: model strategy mismatch");
    cfg.validate();
    auto experts = model.encode(batch);
    const auto present = experts.present();
    if (present.empty()) throw contract_error("mvae_objective: no modality available");

    ReportBuilder rb;
    Tensor total;
    const auto add_elbo = [&](const std::string& prefix, const DiagonalGaussian& q,
                              const std::vector<std::size_t>& mods) {
        auto core = elbo_core(model, q, batch, mods, cfg, rng);
        Tensor t = mean_all(core.loss_rows);
        total = total.defined() ? add(total, t) : t;
        rb.part(prefix + ".total", t.item());
        rb.kl_part(prefix + ".kl", core.kl_mean, 1.0);
        for (auto& [m, v] : core.recon_means)
            rb.recon_part(prefix + ".recon." + modality_label(m), m, v, 1.0);
    };

    add_elbo("joint", fusion::poe_fuse(experts, /*include_prior=*/true), present);
    if (present.size() > 1 && cfg.subsample_unimodal) {
        for (std::size_t m : present)
            add_elbo("unimodal_" + modality_label(m),
                     fusion::poe_fuse_subset(experts, {m}, /*include_prior=*/true), {m});
    }
    return rb.finish(total);
}

LossReport mmvae_objective(const MultimodalVae& model, const ModalityBatch& batch,
                           const ObjectiveConfig& cfg, Rng& rng) {
    if (model.strategy() != Strategy::mmvae)
        throw contract_error("mmvae_objective: model strategy mismatch");
    cfg.validate();
    require_complete(model, batch, "mmvae_objective");
    auto experts = model.encode(batch);
    const auto& mods = model.modalities();
    const std::size_t m_count = mods.size();
    const std::size_t b = batch.batch_size;

    // every row is scored under exactly one expert; uniform mixture realized
    // by stratifying the batch
    std::vector<std::size_t> assign;
    if (m_count == 1) {
        assign.assign(b, 0);
    } else {
        assign = fusion::moe_stratified_assign(b, m_count, rng.next_u64());
    }

    ReportBuilder rb;
    Tensor row_loss_sum;
    for (std::size_t mi = 0; mi < m_count; ++mi) {
        std::vector<std::size_t> idx;
        for (std::size_t r = 0; r < b; ++r)
            if (assign[r] == mi) idx.push_back(r);
        if (idx.empty()) continue;
        const std::size_t m = mods[mi];
        const double stratum_weight = static_cast<double>(idx.size()) / static_cast<double>(b);

        const auto& e = experts.experts[m];
        DiagonalGaussian q(take_rows(e.mean, idx), take_rows(e.log_variance, idx));
        auto core = elbo_core(model, q, batch, mods, cfg, rng, &idx);
        Tensor stratum_sum = sum_all(core.loss_rows);
        row_loss_sum = row_loss_sum.defined() ? add(row_loss_sum, stratum_sum) : stratum_sum;

        const std::string prefix = "expert_" + modality_label(m);
        rb.kl_part(prefix + ".kl", core.kl_mean, stratum_weight);
        for (auto& [n, v] : core.recon_means)
            rb.recon_part(prefix + ".recon." + modality_label(n), n, v, stratum_weight);
    }
    return rb.finish(scale(row_loss_sum, 1.0 / static_cast<double>(b)));
}

LossReport mopoe_objective(const MultimodalVae& model, const ModalityBatch& batch,
                           const ObjectiveConfig& cfg, Rng& rng) {
    if (model.strategy() != Strategy::mopoe)
        throw contract_error("mopoe_objective: model strategy mismatch");
    cfg.validate();
    require_complete(model, batch, "mopoe_objective");
    auto experts = model.encode(batch);
    const auto& mods = model.modalities();
    const auto lattice = fusion::enumerate_subsets(mods.size());
    const double subset_weight = 1.0 / static_cast<double>(lattice.subsets.size());

    ReportBuilder rb;
    Tensor total;
    for (const auto& positions : lattice.subsets) {
        std::vector<std::size_t> subset;
        std::string label;
        for (std::size_t pos : positions) {
            subset.push_back(mods[pos]);
            label += (label.empty() ? "" : "+") + modality_label(mods[pos]);
        }
        auto q = fusion::poe_fuse_subset(experts, subset, /*include_prior=*/true);
        // every subset posterior reconstructs all modalities
        auto core = elbo_core(model, q, batch, mods, cfg, rng);
        Tensor t = mean_all(core.loss_rows);
        total = total.defined() ? add(total, t) : t;
        const std::string prefix = "subset_" + label;
        rb.part(prefix + ".total", t.item());
        rb.kl_part(prefix + ".kl", core.kl_mean, subset_weight);
        for (auto& [n, v] : core.recon_means)
            rb.recon_part(prefix + ".recon." + modality_label(n), n, v, subset_weight);
    }
    return rb.finish(scale(total, subset_weight));
}

LossReport dmvae_objective(const MultimodalVae& model, const ModalityBatch& batch,
                           const ObjectiveConfig& cfg, Rng& rng) {
    if (model.strategy() != Strategy::dmvae)
        throw contract_error("dmvae_objective: model strategy mismatch");
    cfg.validate();
    require_complete(model, batch, "dmvae_objective");
    auto enc = model.encode_dmvae(batch);
    const auto& layout = model.dmvae_layout();
    auto fused = fusion::dmvae_fuse(enc.shared, layout, enc.privates);
    const auto& mods = model.modalities();
    const std::size_t b = batch.batch_size;
    const std::size_t s_dim = layout.shared_dim;

    ReportBuilder rb;
    // KL on the fused shared posterior plus each private posterior
    Tensor kl_shared = kl_to_standard_normal(fused.shared);
    Tensor loss_rows = scale(kl_shared, cfg.beta);
    rb.kl_part("kl.shared", value_mean(kl_shared), 1.0);
    for (std::size_t m : mods) {
        Tensor kl_priv = kl_to_standard_normal(fused.privates[m]);
        loss_rows = add(loss_rows, scale(kl_priv, cfg.beta));
        rb.kl_part("kl.private." + modality_label(m), value_mean(kl_priv), 1.0);
    }

    for (std::size_t m : mods) {
        const std::size_t p_dim = layout.private_dims[m];
        Tensor noise = Tensor::randn({b, s_dim + p_dim}, rng);
        Tensor z_shared = reparam_sample(fused.shared, slice_cols(noise, 0, s_dim)).z;
        Tensor z_priv = reparam_sample(fused.privates[m], slice_cols(noise, s_dim, p_dim)).z;
        Tensor target = target_tensor(batch, m);

        // self term: decode x_m from [fused shared, private_m]
        Tensor rec_self = recon_rows(m, model, decode_for(model, m, concat_cols({z_shared, z_priv})),
                                     target);
        loss_rows = sub(loss_rows, scale(rec_self, cfg.likelihood_weights[m]));
        rb.recon_part("recon." + modality_label(m) + ".self", m, value_mean(rec_self), 1.0);

        // cross terms: swap the shared sample for each other modality's expert
        for (std::size_t n : mods) {
            if (n == m) continue;
            Tensor cross_noise = Tensor::randn({b, s_dim}, rng);
            Tensor z_shared_n = reparam_sample(enc.shared.experts[n], cross_noise).z;
            Tensor rec_cross = recon_rows(
                m, model, decode_for(model, m, concat_cols({z_shared_n, z_priv})), target);
            loss_rows = sub(loss_rows, scale(rec_cross, cfg.likelihood_weights[m]));
            rb.recon_part("recon." + modality_label(m) + ".from_" + modality_label(n), m,
                          value_mean(rec_cross), 1.0);
        }
    }
    return rb.finish(mean_all(loss_rows));
}

LossReport objective(const MultimodalVae& model, const ModalityBatch& batch,
                     const ObjectiveConfig& cfg, Rng& rng) {
    switch (model.strategy()) {
        case Strategy::mvae: return mvae_objective(model, batch, cfg, rng);
        case Strategy::mmvae: return mmvae_objective(model, batch, cfg, rng);
        case Strategy::mopoe: return mopoe_objective(model, batch, cfg, rng);
        case Strategy::dmvae: return dmvae_objective(model, batch, cfg, rng);
    }
    throw contract_error("objective: unknown strategy");
}

}  // namespace mmvb::models
