#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mmvb/core/ops.hpp"
#include "mmvb/core/tensor.hpp"

namespace mmvb::core {

// Fully connected stack: layer_widths[0] inputs through layer_widths.back()
// outputs, activation between layers (never after the last). A gaussian_pair
// head doubles the final width and splits it into (mean, log_variance).
struct MlpSpec {
    enum class Activation { relu, none };
    enum class Heads { single, gaussian_pair };

    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::relu;
    Heads heads = Heads::single;

    std::size_t input_width() const { return layer_widths.front(); }
    std::size_t output_width() const { return layer_widths.back(); }
    void validate() const;
};

// Registers weight/bias tensors under "<prefix>.layerI.weight|bias" and
// returns the prefix for forward lookups.
void init_mlp_params(const MlpSpec& spec, ParamSet& params, const std::string& prefix,
                     Rng& rng);

Tensor mlp_forward(const MlpSpec& spec, const ParamSet& params, const std::string& prefix,
                   const Tensor& input);

// gaussian_pair head: returns (mean, log_variance), each output_width wide.
std::pair<Tensor, Tensor> mlp_forward_gaussian(const MlpSpec& spec, const ParamSet& params,
                                               const std::string& prefix,
                                               const Tensor& input);

}  // namespace mmvb::core
