#pragma once

#include <string>
#include <vector>

// CdSprites+ attribute domain: 3 shapes x 2 sizes x 5 colors x 4 quadrants x
// 2 backgrounds = 240 level-5 combinations. Attributes outside the level's
// scope hold fixed defaults (big, white render, unconstrained position, dark
// background). Captions follow the rigid order
// size, color, shape, position, background.

namespace mmvb::cdsprites {

enum class Shape { heart, square, ellipse };
enum class Size { big, small };
enum class Color { white, red, green, blue, yellow, pink };  // white = default render
enum class Quadrant { unconstrained, top_left, top_right, bottom_left, bottom_right };
enum class Background { dark, light };

struct AttributeSet {
    int level = 1;  // 1..5
    Shape shape = Shape::heart;
    Size size = Size::big;
    Color color = Color::white;
    Quadrant quadrant = Quadrant::unconstrained;
    Background background = Background::dark;

    bool operator==(const AttributeSet&) const = default;
    void validate() const;  // defaults enforced outside the level's scope
};

// level scope: which feature families vary (and are captioned/evaluated)
inline bool level_has_size(int level) { return level >= 2; }
inline bool level_has_color(int level) { return level >= 3; }
inline bool level_has_quadrant(int level) { return level >= 4; }
inline bool level_has_background(int level) { return level >= 5; }
std::size_t feature_count(int level);  // 1..5

// full cross product for the level, fixed enumeration order
std::vector<AttributeSet> level_combinations(int level);

std::string make_caption(const AttributeSet& attrs);

// word tables
const std::vector<std::string>& shape_words();       // heart square ellipse
const std::vector<std::string>& size_words();        // big small
const std::vector<std::string>& color_words();       // red green blue yellow pink
const std::vector<std::string>& vertical_words();    // top bottom
const std::vector<std::string>& horizontal_words();  // left right
const std::vector<std::string>& background_words();  // dark light

std::string to_word(Shape s);
std::string to_word(Size s);
std::string to_word(Color c);      // "white" for the default render
std::string to_word(Quadrant q);   // "top left" style; "unconstrained" for default
std::string to_word(Background b);
Shape shape_from_word(const std::string& w);
Size size_from_word(const std::string& w);
Color color_from_word(const std::string& w);
Quadrant quadrant_from_word(const std::string& w);
Background background_from_word(const std::string& w);

}  // namespace mmvb::cdsprites
