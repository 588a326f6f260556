#include "mmvb/eval/caption_parse.hpp"

#include <vector>

#include "mmvb/core/error.hpp"

namespace mmvb::eval {

using namespace cdsprites;

namespace {

std::vector<std::string> split_on_spaces(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (c == ' ') {
            tokens.push_back(cur);  // empty tokens mark doubled spaces
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    tokens.push_back(cur);
    if (tokens.size() == 1 && tokens[0].empty()) tokens.clear();
    return tokens;
}

template <typename T>
std::optional<T> lookup(const std::vector<std::string>& vocab, const std::string& word) {
    for (std::size_t i = 0; i < vocab.size(); ++i)
        if (vocab[i] == word) return static_cast<T>(i);
    return std::nullopt;
}

}  // namespace

std::size_t CaptionParse::valid_features() const {
    std::size_t n = shape.has_value() ? 1 : 0;
    if (level_has_size(level) && size) ++n;
    if (level_has_color(level) && color) ++n;
    if (level_has_quadrant(level) && quadrant) ++n;
    if (level_has_background(level) && background) ++n;
    return n;
}

std::size_t CaptionParse::matches(const AttributeSet& truth) const {
    std::size_t n = 0;
    if (shape && *shape == truth.shape) ++n;
    if (level_has_size(level) && size && *size == truth.size) ++n;
    if (level_has_color(level) && color && *color == truth.color) ++n;
    if (level_has_quadrant(level) && quadrant && *quadrant == truth.quadrant) ++n;
    if (level_has_background(level) && background && *background == truth.background) ++n;
    return n;
}

CaptionParse parse_caption(const std::string& caption, int level) {
    if (level < 1 || level > 5) throw contract_error("parse_caption: level out of range");
    CaptionParse out;
    out.level = level;
    const auto tokens = split_on_spaces(caption);

    std::size_t slot = 0;
    bool fillers_ok = true;
    const auto next = [&]() -> const std::string* {
        return slot < tokens.size() ? &tokens[slot++] : nullptr;
    };

    if (level_has_size(level)) {
        if (const auto* w = next()) out.size = lookup<Size>(size_words(), *w);
    }
    if (level_has_color(level)) {
        if (const auto* w = next()) {
            const auto c = lookup<Color>(color_words(), *w);
            // palette enum starts after the white default
            if (c) out.color = static_cast<Color>(static_cast<int>(*c) + 1);
        }
    }
    if (const auto* w = next()) out.shape = lookup<Shape>(shape_words(), *w);
    if (level_has_quadrant(level)) {
        const std::string* at = next();
        fillers_ok = fillers_ok && at != nullptr && *at == "at";
        const std::string* vert = next();
        const std::string* horiz = next();
        if (vert != nullptr && horiz != nullptr) {
            const bool v_ok = *vert == "top" || *vert == "bottom";
            const bool h_ok = *horiz == "left" || *horiz == "right";
            if (v_ok && h_ok) {
                const bool top = *vert == "top";
                const bool left = *horiz == "left";
                out.quadrant = top ? (left ? Quadrant::top_left : Quadrant::top_right)
                                   : (left ? Quadrant::bottom_left
                                           : Quadrant::bottom_right);
            }
        }
    }
    if (level_has_background(level)) {
        const std::string* on = next();
        fillers_ok = fillers_ok && on != nullptr && *on == "on";
        if (const auto* w = next())
            out.background = lookup<Background>(background_words(), *w);
    }

    const bool all_slots_consumed = slot == tokens.size();
    out.parses_fully = all_slots_consumed && fillers_ok &&
                       out.valid_features() == feature_count(level);
    return out;
}

}  // namespace mmvb::eval
