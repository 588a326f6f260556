#include "mmvb/core/gradcheck.hpp"

#include <cmath>

#include "mmvb/core/error.hpp"

namespace mmvb::core {

GradCheckReport grad_check(ParamSet& params, const std::function<Tensor()>& loss_fn,
                           double h) {
    params.zero_grad();
    Tensor loss = loss_fn();
    if (loss.numel() != 1) throw contract_error("grad_check: loss_fn must return a scalar");
    loss.backward();

    GradCheckReport report;
    NoGradGuard no_grad;
    for (auto& p : params.all()) {
        auto v = p.values();
        auto g = p.grad();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double saved = v[i];
            v[i] = saved + h;
            const double up = loss_fn().item();
            v[i] = saved - h;
            const double down = loss_fn().item();
            v[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double rel =
                std::abs(g[i] - numeric) / std::max(1.0, std::abs(numeric));
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = p.name();
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace mmvb::core
