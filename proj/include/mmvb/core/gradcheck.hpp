#pragma once

#include <functional>
#include <string>

#include "mmvb/core/tensor.hpp"

namespace mmvb::core {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

// Compares the analytic gradient of loss_fn (which must rebuild the graph and
// return a scalar on every call) against central finite differences over every
// element of every parameter. Relative error is |analytic - numeric| /
// max(1, |numeric|). loss_fn has to be deterministic: re-seed any noise inside.
GradCheckReport grad_check(ParamSet& params, const std::function<Tensor()>& loss_fn,
                           double h = 1e-5);

}  // namespace mmvb::core
