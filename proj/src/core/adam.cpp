#include "mmvb/core/adam.hpp"

#include <cmath>

#include "mmvb/core/error.hpp"

namespace mmvb::core {

Adam::Adam(const ParamSet& params, AdamConfig cfg) : cfg_(cfg) {
    first_moment_.reserve(params.size());
    second_moment_.reserve(params.size());
    for (const auto& p : params.all()) {
        first_moment_.emplace_back(p.numel(), 0.0);
        second_moment_.emplace_back(p.numel(), 0.0);
    }
}

void Adam::step(ParamSet& params) {
    if (params.size() != first_moment_.size())
        throw contract_error("Adam: parameter count changed since construction");
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params.all()[pi];
        auto g = p.grad();
        auto v = p.values();
        auto& m1 = first_moment_[pi];
        auto& m2 = second_moment_[pi];
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (std::isnan(g[i]))
                throw numeric_error("Adam: NaN gradient in parameter '" + p.name() +
                                    "' at element " + std::to_string(i));
            m1[i] = cfg_.beta1 * m1[i] + (1.0 - cfg_.beta1) * g[i];
            m2[i] = cfg_.beta2 * m2[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m1[i] / bc1;
            const double vhat = m2[i] / bc2;
            v[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

}  // namespace mmvb::core
