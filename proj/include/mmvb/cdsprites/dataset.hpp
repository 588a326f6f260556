#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmvb/cdsprites/attributes.hpp"
#include "mmvb/cdsprites/png.hpp"

// Dataset generation and manifest access. Layout under the output root:
//   level_N/{train,val,test}/images/%07d.png
//   level_N/{train,val,test}/manifest.jsonl   (fields: image, caption, shape,
//                                              size, color, quadrant,
//                                              background, seed)
//   level_N/{train,val,test}/captions.txt
//   level_N/dataset.json                       (level, seed, written counts)
// Train and val are uniform per attribute combination (requested counts round
// down to a multiple of the combination count); test attributes are drawn
// uniformly at random. Everything derives from the master seed, so reruns are
// byte-identical.

namespace mmvb::cdsprites {

struct LevelSpec {
    int level = 1;
    std::size_t train_count = 0;
    std::size_t val_count = 0;  // 0 = train_count / 9 (the 10% validation share)
    std::size_t test_count = 10000;

    static LevelSpec paper_defaults(int level);
};

struct GenerateSummary {
    int level = 0;
    std::string level_dir;
    std::size_t combination_count = 0;
    std::size_t train_written = 0;
    std::size_t val_written = 0;
    std::size_t test_written = 0;
    std::uint64_t master_seed = 0;
};

GenerateSummary generate_dataset(const LevelSpec& spec, const std::string& out_root,
                                 std::uint64_t master_seed);

struct ManifestEntry {
    std::string image;  // path relative to the split directory
    std::string caption;
    AttributeSet attrs;
    std::uint64_t seed = 0;
};

std::string level_dir_path(const std::string& out_root, int level);

// Errors name the offending manifest line. The level comes from dataset.json
// (read_dataset_level) and fixes which attribute fields are defaults.
std::vector<ManifestEntry> read_manifest(const std::string& split_dir, int level);
Rgb8Image load_entry_image(const std::string& split_dir, const ManifestEntry& entry);

// level recorded in level_N/dataset.json
int read_dataset_level(const std::string& level_dir);

}  // namespace mmvb::cdsprites
