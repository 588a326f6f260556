#include "mmvb/cdsprites/png.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "mmvb/core/error.hpp"

namespace mmvb::cdsprites {
namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

const std::array<std::uint32_t, 256>& crc_table() {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    return table;
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len,
                    std::uint32_t crc = 0xffffffffu) {
    for (std::size_t i = 0; i < len; ++i)
        crc = crc_table()[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
    return crc;
}

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& payload) {
    push_u32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const std::uint32_t crc = crc32(out.data() + start, out.size() - start) ^ 0xffffffffu;
    push_u32(out, crc);
}

}  // namespace

std::vector<std::uint8_t> encode_png_rgb8(const Rgb8Image& image) {
    if (image.pixels.size() !=
        static_cast<std::size_t>(image.width) * image.height * 3)
        throw contract_error("encode_png_rgb8: pixel buffer does not match dimensions");

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);

    std::vector<std::uint8_t> ihdr;
    push_u32(ihdr, image.width);
    push_u32(ihdr, image.height);
    ihdr.push_back(8);   // bit depth
    ihdr.push_back(2);   // color type: truecolor
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    push_chunk(out, "IHDR", ihdr);

    // raw zlib stream: filter byte 0 + scanline, per row
    const std::size_t row_bytes = static_cast<std::size_t>(image.width) * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve(image.height * (row_bytes + 1));
    for (std::uint32_t y = 0; y < image.height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), image.pixels.begin() + y * row_bytes,
                   image.pixels.begin() + (y + 1) * row_bytes);
    }
    std::uint32_t adler_a = 1, adler_b = 0;
    for (std::uint8_t byte : raw) {
        adler_a = (adler_a + byte) % 65521;
        adler_b = (adler_b + adler_a) % 65521;
    }

    std::vector<std::uint8_t> idat;
    idat.push_back(0x78);  // zlib header, 32K window
    idat.push_back(0x01);
    std::size_t off = 0;
    while (off < raw.size() || raw.empty()) {
        const std::size_t block = std::min<std::size_t>(65535, raw.size() - off);
        const bool final = off + block == raw.size();
        idat.push_back(final ? 1 : 0);  // BFINAL, BTYPE=00 (stored)
        idat.push_back(static_cast<std::uint8_t>(block & 0xff));
        idat.push_back(static_cast<std::uint8_t>(block >> 8));
        idat.push_back(static_cast<std::uint8_t>(~block & 0xff));
        idat.push_back(static_cast<std::uint8_t>(~(block >> 8) & 0xff));
        idat.insert(idat.end(), raw.begin() + off, raw.begin() + off + block);
        off += block;
        if (raw.empty()) break;
    }
    push_u32(idat, (adler_b << 16) | adler_a);
    push_chunk(out, "IDAT", idat);
    push_chunk(out, "IEND", {});
    return out;
}

void write_png_rgb8(const std::string& path, const Rgb8Image& image) {
    const auto bytes = encode_png_rgb8(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write failed: " + path);
}

Rgb8Image read_png_rgb8(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path);
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    if (data.size() < 8 || std::memcmp(data.data(), kSignature, 8) != 0)
        throw io_error("not a PNG file: " + path);

    const auto read_u32 = [&](std::size_t at) -> std::uint32_t {
        return (std::uint32_t(data[at]) << 24) | (std::uint32_t(data[at + 1]) << 16) |
               (std::uint32_t(data[at + 2]) << 8) | std::uint32_t(data[at + 3]);
    };

    Rgb8Image img;
    std::vector<std::uint8_t> zstream;
    std::size_t pos = 8;
    while (pos + 8 <= data.size()) {
        const std::uint32_t len = read_u32(pos);
        if (pos + 12 + len > data.size()) throw io_error("truncated PNG: " + path);
        const char* type = reinterpret_cast<const char*>(data.data() + pos + 4);
        const std::uint8_t* payload = data.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            img.width = read_u32(pos + 8);
            img.height = read_u32(pos + 12);
            if (payload[8] != 8 || payload[9] != 2 || payload[12] != 0)
                throw io_error("unsupported PNG format (need 8-bit RGB): " + path);
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            zstream.insert(zstream.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (img.width == 0 || img.height == 0) throw io_error("missing IHDR: " + path);
    if (zstream.size() < 2) throw io_error("missing IDAT: " + path);

    // inflate, stored blocks only
    std::vector<std::uint8_t> raw;
    std::size_t zp = 2;  // skip zlib header
    while (true) {
        if (zp + 5 > zstream.size()) throw io_error("truncated zlib stream: " + path);
        const std::uint8_t header = zstream[zp];
        if ((header & 0x06) != 0)
            throw io_error("unsupported deflate block (only stored blocks): " + path);
        const std::size_t block = zstream[zp + 1] | (std::size_t(zstream[zp + 2]) << 8);
        zp += 5;
        if (zp + block > zstream.size()) throw io_error("truncated zlib stream: " + path);
        raw.insert(raw.end(), zstream.begin() + zp, zstream.begin() + zp + block);
        zp += block;
        if (header & 1) break;
    }

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * 3;
    if (raw.size() != img.height * (row_bytes + 1))
        throw io_error("unexpected scanline data size: " + path);
    img.pixels.reserve(img.height * row_bytes);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        if (raw[y * (row_bytes + 1)] != 0)
            throw io_error("unsupported PNG filter type: " + path);
        const std::uint8_t* row = raw.data() + y * (row_bytes + 1) + 1;
        img.pixels.insert(img.pixels.end(), row, row + row_bytes);
    }
    return img;
}

}  // namespace mmvb::cdsprites
