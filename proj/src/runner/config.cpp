#include "mmvb/runner/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "mmvb/core/error.hpp"

namespace mmvb::runner {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    // "[a, b, c]" or a bare scalar
    std::string inner = value;
    if (!inner.empty() && inner.front() == '[') {
        if (inner.back() != ']') throw config_error("unterminated list: " + value);
        inner = inner.substr(1, inner.size() - 2);
    }
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(inner);
    while (std::getline(in, cur, ',')) {
        const auto t = trim(cur);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse number from '" + v + "'");
    }
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d)))
        throw config_error("key '" + key + "': expected a non-negative integer, got '" +
                           v + "'");
    return static_cast<std::size_t>(d);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("key '" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
    std::vector<std::string> missing;
    if (model.empty()) missing.push_back("model");
    if (dataset_dir.empty()) missing.push_back("dataset_dir");
    if (level == 0) missing.push_back("level");
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw config_error("missing required config keys: " + list);
    }
    (void)strategy();  // rejects unknown model names
    if (level < 1 || level > 5)
        throw config_error("level " + std::to_string(level) + " out of range [1, 5]");
    if (beta <= 0.0) throw config_error("beta must be > 0");
    if (batch_size < 1) throw config_error("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw config_error("learning_rate must be > 0");
    if (latent_dim.empty()) throw config_error("latent_dim needs at least one value");
    for (std::size_t v : latent_dim)
        if (v < 1 || v > 4096)
            throw config_error("latent_dim " + std::to_string(v) + " out of range [1, 4096]");
    if (dmvae_shared_dim.empty())
        throw config_error("dmvae_shared_dim needs at least one value");
    if (dmvae_private_dim < 1) throw config_error("dmvae_private_dim must be >= 1");
    if (seeds.empty()) throw config_error("seeds needs at least one value");
    if (traversal_hi <= traversal_lo)
        throw config_error("traversal range is empty: [" + std::to_string(traversal_lo) +
                           ", " + std::to_string(traversal_hi) + "]");
    if (image_hidden < 1 || text_hidden < 1)
        throw config_error("hidden widths must be >= 1");
    if (dropout != 0.0)
        throw config_error("dropout is a config no-op and must stay 0 (MLP networks)");
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw config_error(origin + ":" + std::to_string(line_no) +
                               ": expected 'key: value'");
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (value.empty())
            throw config_error(origin + ":" + std::to_string(line_no) + ": key '" + key +
                               "' has no value");
        if (!seen.insert(key).second)
            throw config_error(origin + ": duplicate key '" + key + "'");

        if (key == "model") {
            cfg.model = value;
        } else if (key == "dataset_dir") {
            cfg.dataset_dir = value;
        } else if (key == "level") {
            cfg.level = static_cast<int>(parse_count(key, value));
        } else if (key == "latent_dim") {
            cfg.latent_dim.clear();
            for (const auto& v : split_list(value))
                cfg.latent_dim.push_back(parse_count(key, v));
        } else if (key == "dmvae_shared_dim") {
            cfg.dmvae_shared_dim.clear();
            for (const auto& v : split_list(value))
                cfg.dmvae_shared_dim.push_back(parse_count(key, v));
        } else if (key == "dmvae_private_dim") {
            cfg.dmvae_private_dim = parse_count(key, value);
        } else if (key == "beta") {
            cfg.beta = parse_double(key, value);
        } else if (key == "batch_size") {
            cfg.batch_size = parse_count(key, value);
        } else if (key == "epochs") {
            cfg.epochs = parse_count(key, value);
        } else if (key == "learning_rate") {
            cfg.learning_rate = parse_double(key, value);
        } else if (key == "seeds") {
            cfg.seeds.clear();
            for (const auto& v : split_list(value))
                cfg.seeds.push_back(static_cast<std::uint64_t>(parse_count(key, v)));
        } else if (key == "likelihood_weight_image") {
            cfg.likelihood_weight_image = parse_double(key, value);
        } else if (key == "likelihood_weight_text") {
            cfg.likelihood_weight_text = parse_double(key, value);
        } else if (key == "subsample_unimodal") {
            cfg.subsample_unimodal = parse_bool(key, value);
        } else if (key == "eval_importance_samples") {
            cfg.eval_importance_samples = parse_count(key, value);
        } else if (key == "eval_samples") {
            cfg.eval_samples = parse_count(key, value);
        } else if (key == "traversal_per_dim") {
            cfg.traversal_per_dim = parse_count(key, value);
        } else if (key == "traversal_lo") {
            cfg.traversal_lo = parse_double(key, value);
        } else if (key == "traversal_hi") {
            cfg.traversal_hi = parse_double(key, value);
        } else if (key == "image_hidden") {
            cfg.image_hidden = parse_count(key, value);
        } else if (key == "text_hidden") {
            cfg.text_hidden = parse_count(key, value);
        } else if (key == "checkpoint_every") {
            cfg.checkpoint_every = parse_count(key, value);
        } else if (key == "dropout") {
            cfg.dropout = parse_double(key, value);
        } else {
            throw config_error(origin + ":" + std::to_string(line_no) +
                               ": unknown config key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string default_output_root() {
    if (const char* v = std::getenv("MMVB_OUT_ROOT"))
        if (*v != '\0') return v;
    return "runs";
}

}  // namespace mmvb::runner
