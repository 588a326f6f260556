#include "mmvb/cdsprites/caption_codec.hpp"

#include "mmvb/core/error.hpp"

namespace mmvb::cdsprites {

using core::char_to_index;
using core::index_to_char;
using core::kAlphabetSize;

CaptionEncoding encode_caption(const std::string& caption) {
    if (caption.size() > kMaxCaptionLen)
        throw contract_error("caption longer than " + std::to_string(kMaxCaptionLen) +
                             " characters: '" + caption + "'");
    CaptionEncoding enc;
    enc.length = caption.size();
    enc.onehot.assign(kMaxCaptionLen * kAlphabetSize, 0.0);
    enc.mask.assign(kMaxCaptionLen, 0);
    for (std::size_t p = 0; p < caption.size(); ++p) {
        const int idx = char_to_index(caption[p]);
        if (idx < 0)
            throw contract_error("illegal caption character at position " +
                                 std::to_string(p) + ": '" + caption + "'");
        enc.onehot[p * kAlphabetSize + static_cast<std::size_t>(idx)] = 1.0;
        enc.mask[p] = 1;
    }
    return enc;
}

CaptionEncoding encode_caption_padded(const std::string& caption) {
    std::string padded = caption;
    padded.resize(kMaxCaptionLen, ' ');
    return encode_caption(padded);
}

std::string decode_caption(const CaptionEncoding& enc) {
    std::string out;
    out.reserve(enc.length);
    for (std::size_t p = 0; p < enc.length; ++p) {
        const double* row = enc.onehot.data() + p * kAlphabetSize;
        std::size_t hot = kAlphabetSize;
        for (std::size_t c = 0; c < kAlphabetSize; ++c) {
            if (row[c] == 1.0) {
                hot = c;
                break;
            }
        }
        if (hot == kAlphabetSize)
            throw contract_error("decode_caption: row " + std::to_string(p) +
                                 " is not one-hot");
        out.push_back(index_to_char(hot));
    }
    return out;
}

std::string decode_argmax(const double* rows, std::size_t positions) {
    std::string out;
    out.reserve(positions);
    for (std::size_t p = 0; p < positions; ++p) {
        const double* row = rows + p * kAlphabetSize;
        std::size_t best = 0;
        for (std::size_t c = 1; c < kAlphabetSize; ++c)
            if (row[c] > row[best]) best = c;
        out.push_back(index_to_char(best));
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace mmvb::cdsprites
