#pragma once

#include <optional>
#include <string>

#include "mmvb/cdsprites/attributes.hpp"

namespace mmvb::eval {

using cdsprites::AttributeSet;

// Positional parse of a (possibly malformed) caption against the level's
// rigid grammar. Each slot is checked against its positional vocabulary;
// the two position words count as one feature; the fillers "at"/"on" are
// validated but never counted.
struct CaptionParse {
    int level = 1;
    bool parses_fully = false;  // exact token count and every slot valid
    std::optional<cdsprites::Shape> shape;
    std::optional<cdsprites::Size> size;
    std::optional<cdsprites::Color> color;
    std::optional<cdsprites::Quadrant> quadrant;
    std::optional<cdsprites::Background> background;

    std::size_t valid_features() const;
    // features that are valid and equal to the ground truth
    std::size_t matches(const AttributeSet& truth) const;
};

CaptionParse parse_caption(const std::string& caption, int level);

}  // namespace mmvb::eval
