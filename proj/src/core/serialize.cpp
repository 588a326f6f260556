#include "mmvb/core/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mmvb/core/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

namespace mmvb::core {
namespace {

constexpr char kMagic[4] = {'M', 'M', 'V', 'B'};

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw io_error("checkpoint truncated: " + path);
    return v;
}

}  // namespace

void save_params(const std::string& path, const ParamSet& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kCheckpointVersion);
    write_pod<std::uint64_t>(out, params.size());
    for (const auto& p : params.all()) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(p.name().size()));
        out.write(p.name().data(), static_cast<std::streamsize>(p.name().size()));
        write_pod<std::uint64_t>(out, p.shape().size());
        for (std::size_t d : p.shape()) write_pod<std::uint64_t>(out, d);
        out.write(reinterpret_cast<const char*>(p.values().data()),
                  static_cast<std::streamsize>(p.numel() * sizeof(double)));
    }
    if (!out) throw io_error("write failed for checkpoint: " + path);
}

void load_params(const std::string& path, ParamSet& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("not an MMVB checkpoint: " + path);
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kCheckpointVersion)
        throw io_error("unsupported checkpoint version " + std::to_string(version) +
                       ": " + path);
    const auto count = read_pod<std::uint64_t>(in, path);
    for (std::uint64_t idx = 0; idx < count; ++idx) {
        const auto name_len = read_pod<std::uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<std::uint64_t>(in, path);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(in, path));
        if (!in) throw io_error("checkpoint truncated: " + path);
        if (!params.contains(name))
            throw io_error("checkpoint parameter '" + name + "' not present in model");
        Tensor& p = params.get(name);
        if (p.shape() != shape)
            throw io_error("checkpoint parameter '" + name + "' has mismatched shape");
        in.read(reinterpret_cast<char*>(p.values().data()),
                static_cast<std::streamsize>(p.numel() * sizeof(double)));
        if (!in) throw io_error("checkpoint truncated: " + path);
        p.zero_grad();
    }
}

}  // namespace mmvb::core
