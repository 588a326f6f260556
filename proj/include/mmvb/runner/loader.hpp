#pragma once

#include <string>
#include <vector>

#include "mmvb/cdsprites/dataset.hpp"
#include "mmvb/models/vae.hpp"

namespace mmvb::runner {

// Streams shuffled ModalityBatches from a generated split. Shuffling is a
// seeded permutation per epoch; the trailing partial batch is dropped. Decoded
// images are cached in memory after first use (u8, so ~12 KB per sample).
class DatasetLoader {
public:
    DatasetLoader(const std::string& level_dir, const std::string& split,
                  std::size_t batch_size);

    std::size_t sample_count() const { return entries_.size(); }
    std::size_t batches_per_epoch() const { return entries_.size() / batch_size_; }
    int level() const { return level_; }

    void begin_epoch(std::uint64_t epoch_seed);
    models::ModalityBatch batch(std::size_t batch_index) const;

    const cdsprites::ManifestEntry& entry(std::size_t i) const { return entries_[i]; }

private:
    std::string split_dir_;
    int level_ = 1;
    std::size_t batch_size_ = 32;
    std::vector<cdsprites::ManifestEntry> entries_;
    std::vector<std::size_t> order_;
    mutable std::vector<std::vector<std::uint8_t>> image_cache_;
};

}  // namespace mmvb::runner
