#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Minimal 8-bit RGB PNG writer/reader. Files are standard PNGs using
// uncompressed (stored) deflate blocks, so output bytes are a pure function
// of the pixels. The reader handles exactly this subset, which covers every
// file this toolkit produces.

namespace mmvb::cdsprites {

struct Rgb8Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3, row-major
};

void write_png_rgb8(const std::string& path, const Rgb8Image& image);
Rgb8Image read_png_rgb8(const std::string& path);

// In-memory encode (used by tests and the manifest hasher).
std::vector<std::uint8_t> encode_png_rgb8(const Rgb8Image& image);

}  // namespace mmvb::cdsprites
