#include "mmvb/fusion/fusion.hpp"

#include <algorithm>

#include "mmvb/core/error.hpp"
#include "mmvb/core/rng.hpp"

namespace mmvb::fusion {

using namespace core;

std::vector<std::size_t> ExpertSet::present() const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < experts.size(); ++m)
        if (m < availability.size() && availability[m]) out.push_back(m);
    return out;
}

void ExpertSet::validate() const {
    const auto idx = present();
    if (idx.empty()) throw contract_error("ExpertSet: no experts present");
    const auto& ref = experts[idx[0]].mean.shape();
    for (std::size_t m : idx)
        if (experts[m].mean.shape() != ref)
            throw shape_error("ExpertSet: present experts have differing shapes");
}

std::size_t DmvaeLatentLayout::total_dim() const {
    std::size_t t = shared_dim;
    for (std::size_t d : private_dims) t += d;
    return t;
}

namespace {

DiagonalGaussian poe_over(const std::vector<const DiagonalGaussian*>& experts,
                          bool include_prior) {
    if (experts.empty() && !include_prior)
        throw contract_error("poe_fuse: empty expert set without prior");
    if (experts.empty())
        throw contract_error("poe_fuse: prior-only fusion has no shape to infer");
    const std::size_t batch = experts[0]->batch();
    const std::size_t dim = experts[0]->dim();

    // precision T_i = exp(-logvar_i); fused precision = sum T_i (+1 for prior)
    Tensor precision_sum = include_prior ? Tensor::full({batch, dim}, 1.0)
                                         : Tensor::zeros({batch, dim});
    Tensor weighted_mean_sum = Tensor::zeros({batch, dim});
    for (const auto* e : experts) {
        Tensor t = exp_t(neg(e->log_variance));
        precision_sum = add(precision_sum, t);
        weighted_mean_sum = add(weighted_mean_sum, mul(e->mean, t));
    }
    Tensor fused_mean = div(weighted_mean_sum, precision_sum);
    Tensor fused_logvar = neg(log_t(precision_sum));
    return DiagonalGaussian(std::move(fused_mean), std::move(fused_logvar));
}

}  // namespace

DiagonalGaussian poe_fuse(const ExpertSet& set, bool include_prior) {
    set.validate();
    std::vector<const DiagonalGaussian*> ptrs;
    for (std::size_t m : set.present()) ptrs.push_back(&set.experts[m]);
    return poe_over(ptrs, include_prior);
}

DiagonalGaussian poe_fuse_subset(const ExpertSet& set,
                                 const std::vector<std::size_t>& subset,
                                 bool include_prior) {
    if (subset.empty()) throw contract_error("poe_fuse_subset: empty subset");
    std::vector<const DiagonalGaussian*> ptrs;
    for (std::size_t m : subset) {
        if (m >= set.experts.size() || !set.availability[m])
            throw contract_error("poe_fuse_subset: modality " + std::to_string(m) +
                                 " not present");
        ptrs.push_back(&set.experts[m]);
    }
    return poe_over(ptrs, include_prior);
}

SubsetLattice enumerate_subsets(std::size_t modality_count) {
    if (modality_count == 0) throw contract_error("enumerate_subsets: M must be >= 1");
    if (modality_count > 20) throw contract_error("enumerate_subsets: M too large");
    SubsetLattice lattice;
    lattice.modality_count = modality_count;
    for (std::size_t bits = 1; bits < (std::size_t{1} << modality_count); ++bits) {
        std::vector<std::size_t> s;
        for (std::size_t m = 0; m < modality_count; ++m)
            if (bits & (std::size_t{1} << m)) s.push_back(m);
        lattice.subsets.push_back(std::move(s));
    }
    std::sort(lattice.subsets.begin(), lattice.subsets.end(),
              [](const auto& a, const auto& b) {
                  if (a.size() != b.size()) return a.size() < b.size();
                  return a < b;
              });
    return lattice;
}

std::vector<DiagonalGaussian> mopoe_posteriors(const ExpertSet& set,
                                               const SubsetLattice& lattice) {
    if (lattice.modality_count != set.modality_count())
        throw contract_error("mopoe_posteriors: lattice size does not match expert set");
    for (std::size_t m = 0; m < set.modality_count(); ++m)
        if (!set.availability[m])
            throw contract_error("mopoe_posteriors: all modalities must be present");
    std::vector<DiagonalGaussian> out;
    out.reserve(lattice.subsets.size());
    for (const auto& subset : lattice.subsets)
        out.push_back(poe_fuse_subset(set, subset, /*include_prior=*/true));
    return out;
}

std::vector<std::size_t> moe_stratified_assign(std::size_t batch_size,
                                               std::size_t modality_count,
                                               std::uint64_t seed) {
    if (modality_count == 0) throw contract_error("moe_stratified_assign: M must be >= 1");
    if (batch_size < modality_count)
        throw contract_error("moe_stratified_assign: batch smaller than expert count");
    std::vector<std::size_t> assign;
    assign.reserve(batch_size);
    const std::size_t base = batch_size / modality_count;
    const std::size_t rem = batch_size % modality_count;
    for (std::size_t e = 0; e < modality_count; ++e) {
        const std::size_t count = base + (e < rem ? 1 : 0);
        assign.insert(assign.end(), count, e);
    }
    Rng rng(seed);
    for (std::size_t i = batch_size - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(assign[i], assign[j]);
    }
    return assign;
}

DmvaeFusion dmvae_fuse(const ExpertSet& set, const DmvaeLatentLayout& layout,
                       const std::vector<DiagonalGaussian>& per_modality_private) {
    set.validate();
    for (std::size_t m : set.present())
        if (set.experts[m].dim() != layout.shared_dim)
            throw contract_error("dmvae_fuse: shared expert width " +
                                 std::to_string(set.experts[m].dim()) +
                                 " does not match layout shared_dim " +
                                 std::to_string(layout.shared_dim));
    if (per_modality_private.size() != layout.private_dims.size())
        throw contract_error("dmvae_fuse: private posterior count mismatch");
    for (std::size_t m = 0; m < per_modality_private.size(); ++m) {
        if (!per_modality_private[m].mean.defined()) continue;  // absent modality
        if (per_modality_private[m].dim() != layout.private_dims[m])
            throw contract_error("dmvae_fuse: private width mismatch for modality " +
                                 std::to_string(m));
    }
    DmvaeFusion out;
    out.shared = poe_fuse(set, /*include_prior=*/true);
    out.privates = per_modality_private;
    return out;
}

}  // namespace mmvb::fusion
