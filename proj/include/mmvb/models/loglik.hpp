#pragma once

#include "mmvb/core/rng.hpp"
#include "mmvb/models/vae.hpp"

namespace mmvb::models {

// Importance-weighted log-likelihood estimates, averaged over the batch:
//   log p(x1)      with the image posterior as proposal
//   log p(x1, x2)  with the joint posterior (mixtures for mmvae/mopoe)
//   log p(x1 | x2) with the text posterior as proposal, scoring only x1
// Image likelihoods use the same dropped-constant convention as training, so
// values are comparable across models and K but carry an additive offset.
struct LogLikEstimates {
    double logp_x1 = 0.0;
    double logp_joint = 0.0;
    double logp_x1_given_x2 = 0.0;
    std::size_t importance_samples = 0;
};

// K >= 1. Samples are accumulated one at a time through a running
// log-sum-exp, so memory stays flat in K.
LogLikEstimates estimate_log_likelihoods(const MultimodalVae& model,
                                         const ModalityBatch& batch, std::size_t k,
                                         core::Rng& rng);

}  // namespace mmvb::models
