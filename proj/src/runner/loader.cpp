#include "mmvb/runner/loader.hpp"

#include <filesystem>
#include <numeric>

#include "mmvb/cdsprites/caption_codec.hpp"
#include "mmvb/core/error.hpp"
#include "mmvb/core/rng.hpp"

namespace mmvb::runner {

using namespace cdsprites;
using namespace models;

DatasetLoader::DatasetLoader(const std::string& level_dir, const std::string& split,
                             std::size_t batch_size)
    : batch_size_(batch_size) {
    if (batch_size_ == 0) throw contract_error("DatasetLoader: batch_size must be >= 1");
    level_ = read_dataset_level(level_dir);
    split_dir_ = (std::filesystem::path(level_dir) / split).string();
    entries_ = read_manifest(split_dir_, level_);
    if (entries_.size() < batch_size_)
        throw contract_error("DatasetLoader: split smaller than one batch");
    order_.resize(entries_.size());
    std::iota(order_.begin(), order_.end(), 0);
    image_cache_.resize(entries_.size());
}

void DatasetLoader::begin_epoch(std::uint64_t epoch_seed) {
    std::iota(order_.begin(), order_.end(), 0);
    core::Rng rng(epoch_seed);
    for (std::size_t i = order_.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
        std::swap(order_[i], order_[j]);
    }
}

ModalityBatch DatasetLoader::batch(std::size_t batch_index) const {
    if (batch_index >= batches_per_epoch())
        throw contract_error("DatasetLoader: batch index past the epoch end");
    const std::size_t b = batch_size_;
    const std::size_t img_dim = 64 * 64 * 3;

    ModalityBatch batch;
    batch.batch_size = b;
    batch.availability = {true, true};
    std::vector<double> img(b * img_dim);
    std::vector<double> onehot(b * kMaxCaptionLen * 27, 0.0);
    batch.text_mask.assign(b * kMaxCaptionLen, 0);
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t idx = order_[batch_index * b + i];
        auto& cached = image_cache_[idx];
        if (cached.empty()) {
            try {
                cached = load_entry_image(split_dir_, entries_[idx]).pixels;
            } catch (const std::exception& ex) {
                throw io_error("DatasetLoader: manifest entry " + std::to_string(idx) +
                               " (" + entries_[idx].image + "): " + ex.what());
            }
        }
        for (std::size_t j = 0; j < img_dim; ++j)
            img[i * img_dim + j] = cached[j] / 255.0;
        const auto enc = encode_caption_padded(entries_[idx].caption);
        std::copy(enc.onehot.begin(), enc.onehot.end(),
                  onehot.begin() + i * enc.onehot.size());
        std::copy(enc.mask.begin(), enc.mask.end(),
                  batch.text_mask.begin() + i * kMaxCaptionLen);
    }
    batch.image = core::Tensor::from({b, img_dim}, std::move(img));
    batch.text_onehot = core::Tensor::from({b, kMaxCaptionLen * 27}, std::move(onehot));
    return batch;
}

}  // namespace mmvb::runner
