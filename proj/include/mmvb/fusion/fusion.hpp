#pragma once

#include <cstdint>
#include <vector>

#include "mmvb/dist/gaussian.hpp"

// Joint-posterior construction over per-modality expert Gaussians: product of
// experts, the subset lattice behind mixture-of-products, stratified
// mixture assignment, and the shared/private split. Everything here builds
// distributions only; objectives decide what gets reconstructed from them.

namespace mmvb::fusion {

using dist::DiagonalGaussian;

struct ExpertSet {
    std::vector<DiagonalGaussian> experts;  // one slot per modality
    std::vector<bool> availability;         // true where the expert is usable

    std::size_t modality_count() const { return experts.size(); }
    std::vector<std::size_t> present() const;
    void validate() const;  // present experts share shape; at least one present
};

struct SubsetLattice {
    std::size_t modality_count = 0;
    // all 2^M - 1 non-empty subsets, ordered by size then lexicographically
    std::vector<std::vector<std::size_t>> subsets;
};

struct DmvaeLatentLayout {
    std::size_t shared_dim = 0;
    std::vector<std::size_t> private_dims;  // one per modality

    std::size_t total_dim() const;
    std::size_t modality_width(std::size_t m) const {
        return shared_dim + private_dims[m];
    }
};

// Precision-weighted product of the present experts; include_prior adds the
// standard-normal prior as one more unit-precision expert.
DiagonalGaussian poe_fuse(const ExpertSet& set, bool include_prior);
// Restricted to the given modality indices (must all be present).
DiagonalGaussian poe_fuse_subset(const ExpertSet& set,
                                 const std::vector<std::size_t>& subset,
                                 bool include_prior);

SubsetLattice enumerate_subsets(std::size_t modality_count);

// One PoE-with-prior posterior per lattice subset; requires all experts.
std::vector<DiagonalGaussian> mopoe_posteriors(const ExpertSet& set,
                                               const SubsetLattice& lattice);

// Uniform mixture realized by stratification: every expert gets floor(B/M) or
// ceil(B/M) rows (earlier experts take the remainder), positions shuffled
// deterministically from the seed.
std::vector<std::size_t> moe_stratified_assign(std::size_t batch_size,
                                               std::size_t modality_count,
                                               std::uint64_t seed);

struct DmvaeFusion {
    DiagonalGaussian shared;
    std::vector<DiagonalGaussian> privates;
};

// shared experts (in `set`, width shared_dim) are PoE-fused with the prior;
// private posteriors pass through untouched after width validation.
DmvaeFusion dmvae_fuse(const ExpertSet& set, const DmvaeLatentLayout& layout,
                       const std::vector<DiagonalGaussian>& per_modality_private);

}  // namespace mmvb::fusion
