#include "mmvb/cdsprites/attributes.hpp"

#include "mmvb/core/error.hpp"

namespace mmvb::cdsprites {

void AttributeSet::validate() const {
    if (level < 1 || level > 5) throw contract_error("AttributeSet: level out of range");
    if (!level_has_size(level) && size != Size::big)
        throw contract_error("AttributeSet: size varies only from level 2");
    if (level_has_color(level) == (color == Color::white))
        throw contract_error("AttributeSet: color scope violated for level " +
                             std::to_string(level));
    if (level_has_quadrant(level) == (quadrant == Quadrant::unconstrained))
        throw contract_error("AttributeSet: quadrant scope violated for level " +
                             std::to_string(level));
    if (!level_has_background(level) && background != Background::dark)
        throw contract_error("AttributeSet: background varies only at level 5");
}

std::size_t feature_count(int level) {
    return static_cast<std::size_t>(1 + level_has_size(level) + level_has_color(level) +
                                    level_has_quadrant(level) +
                                    level_has_background(level));
}

std::vector<AttributeSet> level_combinations(int level) {
    if (level < 1 || level > 5) throw contract_error("level out of range");
    const std::vector<Shape> shapes = {Shape::heart, Shape::square, Shape::ellipse};
    const std::vector<Size> sizes =
        level_has_size(level) ? std::vector<Size>{Size::big, Size::small}
                              : std::vector<Size>{Size::big};
    const std::vector<Color> colors =
        level_has_color(level)
            ? std::vector<Color>{Color::red, Color::green, Color::blue, Color::yellow,
                                 Color::pink}
            : std::vector<Color>{Color::white};
    const std::vector<Quadrant> quads =
        level_has_quadrant(level)
            ? std::vector<Quadrant>{Quadrant::top_left, Quadrant::top_right,
                                    Quadrant::bottom_left, Quadrant::bottom_right}
            : std::vector<Quadrant>{Quadrant::unconstrained};
    const std::vector<Background> bgs =
        level_has_background(level)
            ? std::vector<Background>{Background::dark, Background::light}
            : std::vector<Background>{Background::dark};

    std::vector<AttributeSet> out;
    out.reserve(shapes.size() * sizes.size() * colors.size() * quads.size() * bgs.size());
    for (Shape sh : shapes)
        for (Size sz : sizes)
            for (Color c : colors)
                for (Quadrant q : quads)
                    for (Background b : bgs)
                        out.push_back({level, sh, sz, c, q, b});
    return out;
}

std::string make_caption(const AttributeSet& attrs) {
    attrs.validate();
    std::string s;
    if (level_has_size(attrs.level)) s += to_word(attrs.size) + " ";
    if (level_has_color(attrs.level)) s += to_word(attrs.color) + " ";
    s += to_word(attrs.shape);
    if (level_has_quadrant(attrs.level)) s += " at " + to_word(attrs.quadrant);
    if (level_has_background(attrs.level)) s += " on " + to_word(attrs.background);
    return s;
}

const std::vector<std::string>& shape_words() {
    static const std::vector<std::string> w = {"heart", "square", "ellipse"};
    return w;
}
const std::vector<std::string>& size_words() {
    static const std::vector<std::string> w = {"big", "small"};
    return w;
}
const std::vector<std::string>& color_words() {
    static const std::vector<std::string> w = {"red", "green", "blue", "yellow", "pink"};
    return w;
}
const std::vector<std::string>& vertical_words() {
    static const std::vector<std::string> w = {"top", "bottom"};
    return w;
}
const std::vector<std::string>& horizontal_words() {
    static const std::vector<std::string> w = {"left", "right"};
    return w;
}
const std::vector<std::string>& background_words() {
    static const std::vector<std::string> w = {"dark", "light"};
    return w;
}

std::string to_word(Shape s) { return shape_words()[static_cast<std::size_t>(s)]; }
std::string to_word(Size s) { return size_words()[static_cast<std::size_t>(s)]; }

std::string to_word(Color c) {
    if (c == Color::white) return "white";
    return color_words()[static_cast<std::size_t>(c) - 1];
}

std::string to_word(Quadrant q) {
    switch (q) {
        case Quadrant::unconstrained: return "unconstrained";
        case Quadrant::top_left: return "top left";
        case Quadrant::top_right: return "top right";
        case Quadrant::bottom_left: return "bottom left";
        case Quadrant::bottom_right: return "bottom right";
    }
    return "?";
}

std::string to_word(Background b) {
    return background_words()[static_cast<std::size_t>(b)];
}

namespace {
[[noreturn]] void bad_word(const char* what, const std::string& w) {
    throw contract_error(std::string("unknown ") + what + " word: '" + w + "'");
}
}  // namespace

Shape shape_from_word(const std::string& w) {
    for (std::size_t i = 0; i < shape_words().size(); ++i)
        if (shape_words()[i] == w) return static_cast<Shape>(i);
    bad_word("shape", w);
}

Size size_from_word(const std::string& w) {
    for (std::size_t i = 0; i < size_words().size(); ++i)
        if (size_words()[i] == w) return static_cast<Size>(i);
    bad_word("size", w);
}

Color color_from_word(const std::string& w) {
    if (w == "white") return Color::white;
    for (std::size_t i = 0; i < color_words().size(); ++i)
        if (color_words()[i] == w) return static_cast<Color>(i + 1);
    bad_word("color", w);
}

Quadrant quadrant_from_word(const std::string& w) {
    if (w == "unconstrained") return Quadrant::unconstrained;
    if (w == "top left") return Quadrant::top_left;
    if (w == "top right") return Quadrant::top_right;
    if (w == "bottom left") return Quadrant::bottom_left;
    if (w == "bottom right") return Quadrant::bottom_right;
    bad_word("quadrant", w);
}

Background background_from_word(const std::string& w) {
    for (std::size_t i = 0; i < background_words().size(); ++i)
        if (background_words()[i] == w) return static_cast<Background>(i);
    bad_word("background", w);
}

}  // namespace mmvb::cdsprites
