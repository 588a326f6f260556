#pragma once

#include <cstddef>

// Character-level alphabet shared by the caption codec, the decoders and the
// evaluator: 'a'..'z' map to 0..25, the space to 26.

namespace mmvb::core {

inline constexpr std::size_t kAlphabetSize = 27;
inline constexpr std::size_t kSpaceIndex = 26;

inline int char_to_index(char c) {
    if (c >= 'a' && c <= 'z') return c - 'a';
    if (c == ' ') return static_cast<int>(kSpaceIndex);
    return -1;
}

inline char index_to_char(std::size_t i) {
    return i < 26 ? static_cast<char>('a' + i) : ' ';
}

}  // namespace mmvb::core
