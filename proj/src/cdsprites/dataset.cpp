#include "mmvb/cdsprites/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mmvb/cdsprites/caption_codec.hpp"
#include "mmvb/cdsprites/render.hpp"
#include "mmvb/core/error.hpp"
#include "mmvb/core/rng.hpp"

namespace mmvb::cdsprites {

namespace fs = std::filesystem;
using nlohmann::json;

LevelSpec LevelSpec::paper_defaults(int level) {
    LevelSpec s;
    s.level = level;
    switch (level) {
        case 1: s.train_count = 67500; s.val_count = 7500; break;
        case 2: s.train_count = 108000; s.val_count = 12000; break;
        case 3: s.train_count = 270000; s.val_count = 30000; break;
        case 4: s.train_count = 540000; s.val_count = 60000; break;
        case 5: s.train_count = 864000; s.val_count = 96000; break;
        default: throw contract_error("level out of range");
    }
    s.test_count = 10000;
    return s;
}

std::string level_dir_path(const std::string& out_root, int level) {
    return (fs::path(out_root) / ("level_" + std::to_string(level))).string();
}

namespace {

constexpr std::uint64_t kSplitTrain = 1, kSplitVal = 2, kSplitTest = 3;

std::string image_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%07zu.png", index);
    return std::string("images/") + buf;
}

// fixed field order keeps manifests byte-stable
std::string manifest_line(const ManifestEntry& e) {
    std::string s = "{\"image\": \"" + e.image + "\", \"caption\": \"" + e.caption +
                    "\", \"shape\": \"" + to_word(e.attrs.shape) + "\", \"size\": \"" +
                    to_word(e.attrs.size) + "\", \"color\": \"" + to_word(e.attrs.color) +
                    "\", \"quadrant\": \"" + to_word(e.attrs.quadrant) +
                    "\", \"background\": \"" + to_word(e.attrs.background) +
                    "\", \"seed\": " + std::to_string(e.seed) + "}";
    return s;
}

void write_split(const std::string& split_dir, const std::vector<AttributeSet>& attrs,
                 std::uint64_t master_seed, std::uint64_t split_tag) {
    fs::create_directories(fs::path(split_dir) / "images");
    std::ofstream manifest(fs::path(split_dir) / "manifest.jsonl",
                           std::ios::trunc | std::ios::binary);
    std::ofstream captions(fs::path(split_dir) / "captions.txt",
                           std::ios::trunc | std::ios::binary);
    if (!manifest || !captions)
        throw io_error("cannot create split files under " + split_dir);
    for (std::size_t i = 0; i < attrs.size(); ++i) {
        ManifestEntry e;
        e.image = image_name(i);
        e.attrs = attrs[i];
        e.caption = make_caption(attrs[i]);
        e.seed = core::derive_seed(master_seed, split_tag, i);
        try {
            write_png_rgb8((fs::path(split_dir) / e.image).string(),
                           render_image(e.attrs, e.seed));
        } catch (const std::exception& ex) {
            throw io_error("failed writing sample " + std::to_string(i) + " of " +
                           split_dir + ": " + ex.what());
        }
        manifest << manifest_line(e) << "\n";
        captions << e.caption << "\n";
    }
    if (!manifest || !captions)
        throw io_error("write failed for manifests under " + split_dir);
}

}  // namespace

GenerateSummary generate_dataset(const LevelSpec& spec, const std::string& out_root,
                                 std::uint64_t master_seed) {
    if (spec.level < 1 || spec.level > 5) throw contract_error("level out of range");
    const auto combos = level_combinations(spec.level);
    const std::size_t n_combo = combos.size();
    if (spec.train_count < n_combo)
        throw contract_error("train count " + std::to_string(spec.train_count) +
                             " is below one sample per combination (" +
                             std::to_string(n_combo) + ")");
    const std::size_t val_requested =
        spec.val_count > 0 ? spec.val_count : spec.train_count / 9;
    if (val_requested < n_combo)
        throw contract_error("val count below one sample per combination");

    // uniform per combination: requested counts round down to a multiple
    const std::size_t train_per = spec.train_count / n_combo;
    const std::size_t val_per = val_requested / n_combo;

    std::vector<AttributeSet> train_attrs, val_attrs, test_attrs;
    train_attrs.reserve(train_per * n_combo);
    val_attrs.reserve(val_per * n_combo);
    for (const auto& combo : combos)
        for (std::size_t i = 0; i < train_per; ++i) train_attrs.push_back(combo);
    for (const auto& combo : combos)
        for (std::size_t i = 0; i < val_per; ++i) val_attrs.push_back(combo);
    core::Rng test_rng(core::derive_seed(master_seed, 7000 + spec.level));
    test_attrs.reserve(spec.test_count);
    for (std::size_t i = 0; i < spec.test_count; ++i)
        test_attrs.push_back(combos[test_rng.below(n_combo)]);

    const std::string ldir = level_dir_path(out_root, spec.level);
    write_split((fs::path(ldir) / "train").string(), train_attrs, master_seed, kSplitTrain);
    write_split((fs::path(ldir) / "val").string(), val_attrs, master_seed, kSplitVal);
    write_split((fs::path(ldir) / "test").string(), test_attrs, master_seed, kSplitTest);

    GenerateSummary summary;
    summary.level = spec.level;
    summary.level_dir = ldir;
    summary.combination_count = n_combo;
    summary.train_written = train_attrs.size();
    summary.val_written = val_attrs.size();
    summary.test_written = test_attrs.size();
    summary.master_seed = master_seed;

    json meta = {
        {"level", spec.level},
        {"master_seed", master_seed},
        {"combinations", n_combo},
        {"train", summary.train_written},
        {"val", summary.val_written},
        {"test", summary.test_written},
    };
    std::ofstream meta_out(fs::path(ldir) / "dataset.json", std::ios::trunc);
    meta_out << meta.dump(2) << "\n";
    if (!meta_out) throw io_error("cannot write dataset.json under " + ldir);
    return summary;
}

std::vector<ManifestEntry> read_manifest(const std::string& split_dir, int level) {
    const auto path = fs::path(split_dir) / "manifest.jsonl";
    std::ifstream in(path);
    if (!in) throw io_error("cannot open manifest: " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            ManifestEntry e;
            e.image = j.at("image").get<std::string>();
            e.caption = j.at("caption").get<std::string>();
            e.seed = j.at("seed").get<std::uint64_t>();
            e.attrs.level = level;
            e.attrs.shape = shape_from_word(j.at("shape").get<std::string>());
            e.attrs.size = size_from_word(j.at("size").get<std::string>());
            e.attrs.color = color_from_word(j.at("color").get<std::string>());
            e.attrs.quadrant = quadrant_from_word(j.at("quadrant").get<std::string>());
            e.attrs.background =
                background_from_word(j.at("background").get<std::string>());
            e.attrs.validate();
            out.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw io_error("bad manifest line " + std::to_string(line_no) + " in " +
                           path.string() + ": " + ex.what());
        }
    }
    return out;
}

Rgb8Image load_entry_image(const std::string& split_dir, const ManifestEntry& entry) {
    return read_png_rgb8((fs::path(split_dir) / entry.image).string());
}

int read_dataset_level(const std::string& level_dir) {
    const auto path = fs::path(level_dir) / "dataset.json";
    std::ifstream in(path);
    if (!in) throw io_error("cannot open dataset metadata: " + path.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/true);
    return j.at("level").get<int>();
}

}  // namespace mmvb::cdsprites
