#include "mmvb/core/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "mmvb/core/error.hpp"

namespace mmvb::core {
namespace {

thread_local bool tl_grad_enabled = true;

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw shape_error("tensor shape has a zero dimension");
        n *= d;
    }
    return n;
}

}  // namespace

bool grad_enabled() { return tl_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(tl_grad_enabled) { tl_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { tl_grad_enabled = prev_; }

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> data,
                    bool requires_grad) {
    if (shape_numel(shape) != data.size()) {
        std::ostringstream os;
        os << "tensor data length " << data.size() << " does not match shape product "
           << shape_numel(shape);
        throw shape_error(os.str());
    }
    auto n = std::make_shared<TensorNode>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    if (requires_grad) n->grad.assign(n->value.size(), 0.0);
    return Tensor(std::move(n));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v, bool requires_grad) {
    std::vector<double> data(shape_numel(shape), v);
    return from(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

Tensor Tensor::randn(std::vector<std::size_t> shape, Rng& rng, double stddev,
                     bool requires_grad) {
    std::vector<double> data(shape_numel(shape));
    for (double& x : data) x = stddev * rng.normal();
    return from(std::move(shape), std::move(data), requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) throw contract_error("item() called on non-scalar tensor");
    return n_->value[0];
}

void Tensor::set_requires_grad(bool rg) {
    n_->requires_grad = rg;
    if (rg && n_->grad.size() != n_->value.size()) n_->grad.assign(n_->value.size(), 0.0);
    if (!rg) n_->grad.clear();
}

void Tensor::zero_grad() {
    std::fill(n_->grad.begin(), n_->grad.end(), 0.0);
}

void Tensor::backward() const {
    if (numel() != 1)
        throw contract_error("backward() requires a scalar loss, got numel=" +
                             std::to_string(numel()));
    // Iterative post-order DFS for the topological order.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    struct Frame {
        TensorNode* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    if (visited.insert(n_.get()).second) stack.push_back({n_.get(), 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            TensorNode* p = f.node->parents[f.next_parent++].get();
            if (visited.insert(p).second) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }
    // Interior grads are scratch for this pass; only leaves accumulate across
    // repeated backward() calls.
    for (TensorNode* node : order) {
        if (!node->backward_fn) continue;
        if (node->grad.size() != node->value.size())
            node->grad.assign(node->value.size(), 0.0);
        else
            std::fill(node->grad.begin(), node->grad.end(), 0.0);
    }
    if (n_->grad.size() != n_->value.size()) n_->grad.assign(1, 0.0);
    n_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* node = *it;
        if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
    }
}

Tensor& ParamSet::add(Tensor t, const std::string& name) {
    if (contains(name)) throw contract_error("duplicate parameter name: " + name);
    t.set_name(name);
    t.set_requires_grad(true);
    params_.push_back(std::move(t));
    return params_.back();
}

Tensor& ParamSet::get(const std::string& name) {
    for (auto& p : params_)
        if (p.name() == name) return p;
    throw contract_error("unknown parameter: " + name);
}

const Tensor& ParamSet::get(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name() == name) return p;
    throw contract_error("unknown parameter: " + name);
}

bool ParamSet::contains(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name() == name) return true;
    return false;
}

void ParamSet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

}  // namespace mmvb::core
