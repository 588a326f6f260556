#pragma once

#include <cstdint>
#include <vector>

#include "mmvb/core/tensor.hpp"

namespace mmvb::core {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adam with bias correction. Moment buffers are laid out in parameter order;
// step() updates values in place and throws numeric_error naming the first
// parameter whose gradient contains a NaN.
class Adam {
public:
    Adam(const ParamSet& params, AdamConfig cfg = {});

    void step(ParamSet& params);
    std::uint64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    std::uint64_t step_count_ = 0;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
};

}  // namespace mmvb::core
