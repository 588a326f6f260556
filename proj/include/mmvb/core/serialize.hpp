#pragma once

#include <string>

#include "mmvb/core/tensor.hpp"

namespace mmvb::core {

// Flat binary checkpoint, little-endian:
//   magic "MMVB" | version u32 | parameter count u64
//   per parameter: name length u32 | UTF-8 name | rank u64 | dims u64[] |
//                  float64 payload
// Parameters are written in ParamSet order, so files are byte-stable for a
// fixed model built from a fixed seed.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_params(const std::string& path, const ParamSet& params);

// Loads into an existing ParamSet; every stored name must exist with a
// matching shape (values are overwritten, grads zeroed).
void load_params(const std::string& path, ParamSet& params);

}  // namespace mmvb::core
