#pragma once

#include <string>

#include "mmvb/models/objectives.hpp"
#include "mmvb/runner/config.hpp"

namespace mmvb::runner {

// One grid cell at one seed. Outputs under run_dir:
//   loss.csv                per-epoch rows (epoch, term, value)
//   checkpoint_ep<N>.mmvb   every checkpoint_every epochs
//   checkpoint_final.mmvb   (+ .meta.json sidecars for every checkpoint)
//   run.json                deterministic run record
//   train.log               timings and progress (not byte-stable)
struct RunLog {
    std::string run_dir;
    std::string final_checkpoint;
    bool failed = false;
    std::string failure;
    double first_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
    std::size_t epochs_run = 0;
};

// The latent axis value is latent_dim for fused models, shared_dim for dmvae.
RunLog train(const ExperimentConfig& cfg, std::size_t axis_value, std::uint64_t seed,
             const std::string& run_dir);

// Rebuild the model a checkpoint was trained with ("<ckpt>.meta.json") and
// load its parameters.
models::MultimodalVae load_checkpoint(const std::string& checkpoint_path);

// Level recorded in the checkpoint metadata.
int checkpoint_level(const std::string& checkpoint_path);

std::string run_dir_name(const ExperimentConfig& cfg, std::size_t axis_value,
                         std::uint64_t seed);

}  // namespace mmvb::runner
