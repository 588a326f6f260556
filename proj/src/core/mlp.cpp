#include "mmvb/core/mlp.hpp"

#include <cmath>

#include "mmvb/core/error.hpp"

namespace mmvb::core {

void MlpSpec::validate() const {
    if (layer_widths.size() < 2)
        throw contract_error("MlpSpec needs at least input and output widths");
    for (std::size_t w : layer_widths)
        if (w == 0) throw contract_error("MlpSpec has a zero layer width");
}

void init_mlp_params(const MlpSpec& spec, ParamSet& params, const std::string& prefix,
                     Rng& rng) {
    spec.validate();
    const std::size_t layers = spec.layer_widths.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t fan_in = spec.layer_widths[l];
        std::size_t fan_out = spec.layer_widths[l + 1];
        const bool last = l + 1 == layers;
        if (last && spec.heads == MlpSpec::Heads::gaussian_pair) fan_out *= 2;
        // He init for hidden relu layers, Xavier-ish for the output layer.
        // Biases get a small jitter so no preactivation starts exactly on a
        // relu kink (an all-dead input row would otherwise land there).
        const double stddev = last ? 1.0 / std::sqrt(static_cast<double>(fan_in))
                                   : std::sqrt(2.0 / static_cast<double>(fan_in));
        const std::string base = prefix + ".layer" + std::to_string(l);
        params.add(Tensor::randn({fan_in, fan_out}, rng, stddev), base + ".weight");
        params.add(Tensor::randn({fan_out}, rng, 0.01), base + ".bias");
    }
}

namespace {

Tensor run_stack(const MlpSpec& spec, const ParamSet& params, const std::string& prefix,
                 const Tensor& input) {
    spec.validate();
    if (input.cols() != spec.input_width()) {
        throw shape_error("mlp_forward: input width " + std::to_string(input.cols()) +
                          " does not match spec input width " +
                          std::to_string(spec.input_width()));
    }
    const std::size_t layers = spec.layer_widths.size() - 1;
    Tensor h = input;
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string base = prefix + ".layer" + std::to_string(l);
        h = add_row_broadcast(matmul(h, params.get(base + ".weight")),
                              params.get(base + ".bias"));
        const bool last = l + 1 == layers;
        if (!last && spec.activation == MlpSpec::Activation::relu) h = relu(h);
    }
    return h;
}

}  // namespace

Tensor mlp_forward(const MlpSpec& spec, const ParamSet& params, const std::string& prefix,
                   const Tensor& input) {
    if (spec.heads != MlpSpec::Heads::single)
        throw contract_error("mlp_forward: spec has a gaussian_pair head, use "
                             "mlp_forward_gaussian");
    return run_stack(spec, params, prefix, input);
}

std::pair<Tensor, Tensor> mlp_forward_gaussian(const MlpSpec& spec, const ParamSet& params,
                                               const std::string& prefix,
                                               const Tensor& input) {
    if (spec.heads != MlpSpec::Heads::gaussian_pair)
        throw contract_error("mlp_forward_gaussian: spec has a single head");
    Tensor out = run_stack(spec, params, prefix, input);
    const std::size_t w = spec.output_width();
    return {slice_cols(out, 0, w), slice_cols(out, w, w)};
}

}  // namespace mmvb::core
