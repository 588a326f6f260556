#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmvb/core/rng.hpp"

// Reverse-mode autodiff over dense f64 tensors. A Tensor is a cheap handle on
// a graph node; ops in ops.hpp record backward closures on their outputs.
// Gradients accumulate across backward() calls until zero_grad(); the training
// loop is responsible for zeroing between steps.

namespace mmvb::core {

struct TensorNode {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::string name;  // set for parameters; used in diagnostics and checkpoints
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;
};

class Tensor {
public:
    Tensor() = default;

    static Tensor from(std::vector<std::size_t> shape, std::vector<double> data,
                       bool requires_grad = false);
    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> shape, double v, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor randn(std::vector<std::size_t> shape, Rng& rng, double stddev = 1.0,
                        bool requires_grad = false);

    bool defined() const { return n_ != nullptr; }
    const std::vector<std::size_t>& shape() const { return n_->shape; }
    std::size_t numel() const { return n_->value.size(); }
    // 2-D view used by most ops: first dim x everything else
    std::size_t rows() const { return n_->shape.empty() ? 1 : n_->shape[0]; }
    std::size_t cols() const { return n_->shape.empty() ? numel() : numel() / n_->shape[0]; }

    std::span<double> values() { return n_->value; }
    std::span<const double> values() const { return n_->value; }
    double item() const;  // scalar tensors only
    double at(std::size_t i) const { return n_->value[i]; }

    bool requires_grad() const { return n_->requires_grad; }
    void set_requires_grad(bool rg);
    std::span<const double> grad() const { return n_->grad; }
    std::span<double> grad() { return n_->grad; }
    void zero_grad();

    const std::string& name() const { return n_->name; }
    void set_name(std::string name) { n_->name = std::move(name); }

    // Reverse pass from a scalar loss; populates grads of every reachable
    // requires_grad tensor. Throws contract_error if *this is not scalar.
    void backward() const;

    std::shared_ptr<TensorNode>& node() { return n_; }
    const std::shared_ptr<TensorNode>& node() const { return n_; }

    explicit Tensor(std::shared_ptr<TensorNode> n) : n_(std::move(n)) {}

private:
    std::shared_ptr<TensorNode> n_;
};

// Thread-local switch; ops record no tape while a guard is alive. Used by
// evaluation paths (generation, IWAE estimation, finite differences).
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Named, ordered parameter collection. Order is creation order and is the
// serialization order, so checkpoints are byte-stable for a fixed model.
class ParamSet {
public:
    Tensor& add(Tensor t, const std::string& name);
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::vector<Tensor>& all() { return params_; }
    const std::vector<Tensor>& all() const { return params_; }
    std::size_t size() const { return params_.size(); }
    void zero_grad();

private:
    std::vector<Tensor> params_;
};

}  // namespace mmvb::core
