#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmvb/core/alphabet.hpp"

// Character-level caption encoding: rows 0..length-1 are one-hot over the
// 27-letter alphabet, rows beyond are all-zero, mask true iff row < length.

namespace mmvb::cdsprites {

inline constexpr std::size_t kMaxCaptionLen = 45;

struct CaptionEncoding {
    std::vector<double> onehot;       // kMaxCaptionLen * 27, row-major
    std::vector<std::uint8_t> mask;   // kMaxCaptionLen
    std::size_t length = 0;
};

// Throws contract_error naming the position of the first illegal character.
CaptionEncoding encode_caption(const std::string& caption);

// Training-time variant: the caption is padded with spaces to the full 45
// positions before encoding, so the whole sequence is supervised and decoders
// learn to emit the space tail that generation later trims.
CaptionEncoding encode_caption_padded(const std::string& caption);

// Exact inverse for codec-produced encodings.
std::string decode_caption(const CaptionEncoding& enc);

// For arbitrary (model-produced) rows: per-row argmax mapped to the alphabet,
// trailing spaces trimmed.
std::string decode_argmax(const double* rows, std::size_t positions);

}  // namespace mmvb::cdsprites
