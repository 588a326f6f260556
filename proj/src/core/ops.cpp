#include "mmvb/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmvb/core/error.hpp"
#include "mmvb/kernels/kernels.hpp"

namespace mmvb::core {
namespace {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

void require_same_numel(const Tensor& a, const Tensor& b, const char* op) {
    if (a.numel() != b.numel()) {
        throw shape_error(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
    }
}

// Builds the output node; wires parents + backward only when taping is on and
// some parent needs grad.
Tensor make_node(std::vector<std::size_t> shape, std::vector<double> value,
                 std::vector<Tensor> parents,
                 std::function<void(TensorNode&)> backward_fn) {
    Tensor out = Tensor::from(std::move(shape), std::move(value));
    bool rec = grad_enabled();
    if (rec) {
        rec = false;
        for (const auto& p : parents)
            if (p.requires_grad()) rec = true;
    }
    if (rec) {
        out.set_requires_grad(true);
        auto& node = *out.node();
        node.parents.reserve(parents.size());
        for (auto& p : parents) node.parents.push_back(p.node());
        node.backward_fn = std::move(backward_fn);
    }
    return out;
}

bool wants(const TensorNode& node, std::size_t i) {
    return node.parents[i]->requires_grad;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_numel(a, b, "add");
    std::vector<double> v(a.numel());
    kern::active().add(a.values().data(), b.values().data(), v.data(), v.size());
    return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        if (wants(n, 0))
            kern::active().axpy(1.0, n.grad.data(), n.parents[0]->grad.data(), n.grad.size());
        if (wants(n, 1))
            kern::active().axpy(1.0, n.grad.data(), n.parents[1]->grad.data(), n.grad.size());
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_numel(a, b, "sub");
    std::vector<double> v(a.numel());
    kern::active().sub(a.values().data(), b.values().data(), v.data(), v.size());
    return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        if (wants(n, 0))
            kern::active().axpy(1.0, n.grad.data(), n.parents[0]->grad.data(), n.grad.size());
        if (wants(n, 1))
            kern::active().axpy(-1.0, n.grad.data(), n.parents[1]->grad.data(), n.grad.size());
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_numel(a, b, "mul");
    std::vector<double> v(a.numel());
    kern::active().mul(a.values().data(), b.values().data(), v.data(), v.size());
    return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        const auto& av = n.parents[0]->value;
        const auto& bv = n.parents[1]->value;
        if (wants(n, 0)) {
            auto& da = n.parents[0]->grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += n.grad[i] * bv[i];
        }
        if (wants(n, 1)) {
            auto& db = n.parents[1]->grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) db[i] += n.grad[i] * av[i];
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    require_same_numel(a, b, "div");
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) / b.at(i);
    return make_node(a.shape(), std::move(v), {a, b}, [](TensorNode& n) {
        const auto& av = n.parents[0]->value;
        const auto& bv = n.parents[1]->value;
        if (wants(n, 0)) {
            auto& da = n.parents[0]->grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i) da[i] += n.grad[i] / bv[i];
        }
        if (wants(n, 1)) {
            auto& db = n.parents[1]->grad;
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                db[i] -= n.grad[i] * av[i] / (bv[i] * bv[i]);
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * a.at(i);
    return make_node(a.shape(), std::move(v), {a}, [c](TensorNode& n) {
        if (wants(n, 0))
            kern::active().axpy(c, n.grad.data(), n.parents[0]->grad.data(), n.grad.size());
    });
}

Tensor add_scalar(const Tensor& a, double c) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) + c;
    return make_node(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        if (wants(n, 0))
            kern::active().axpy(1.0, n.grad.data(), n.parents[0]->grad.data(), n.grad.size());
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
    if (k != k2) {
        throw shape_error("matmul: inner dimensions differ, " + shape_str(a.shape()) +
                          " vs " + shape_str(b.shape()));
    }
    std::vector<double> v(m * n, 0.0);
    kern::gemm_nn(a.values().data(), b.values().data(), v.data(), m, k, n);
    return make_node({m, n}, std::move(v), {a, b}, [m, k, n](TensorNode& node) {
        const double* g = node.grad.data();
        if (wants(node, 0)) {
            // dA(m x k) += G(m x n) * B(k x n)^T
            kern::gemm_nt(g, node.parents[1]->value.data(),
                          node.parents[0]->grad.data(), m, n, k);
        }
        if (wants(node, 1)) {
            // dB(k x n) += A(m x k)^T * G(m x n)
            kern::gemm_tn(node.parents[0]->value.data(), g,
                          node.parents[1]->grad.data(), k, m, n);
        }
    });
}

Tensor add_row_broadcast(const Tensor& mat, const Tensor& vec) {
    const std::size_t m = mat.rows(), n = mat.cols();
    if (vec.numel() != n) {
        throw shape_error("add_row_broadcast: vector length " + shape_str(vec.shape()) +
                          " does not match matrix columns " + shape_str(mat.shape()));
    }
    std::vector<double> v(m * n);
    for (std::size_t i = 0; i < m; ++i)
        kern::active().add(mat.values().data() + i * n, vec.values().data(),
                           v.data() + i * n, n);
    return make_node(mat.shape(), std::move(v), {mat, vec}, [m, n](TensorNode& node) {
        if (wants(node, 0))
            kern::active().axpy(1.0, node.grad.data(), node.parents[0]->grad.data(), m * n);
        if (wants(node, 1)) {
            auto& dv = node.parents[1]->grad;
            for (std::size_t i = 0; i < m; ++i)
                kern::active().axpy(1.0, node.grad.data() + i * n, dv.data(), n);
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) > 0.0 ? a.at(i) : 0.0;
    return make_node(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        if (!wants(n, 0)) return;
        const auto& x = n.parents[0]->value;
        auto& dx = n.parents[0]->grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (x[i] > 0.0) dx[i] += n.grad[i];
    });
}

Tensor sigmoid(const Tensor& a) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a.at(i)));
    return make_node(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        if (!wants(n, 0)) return;
        auto& dx = n.parents[0]->grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            dx[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
    });
}

Tensor exp_t(const Tensor& a) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(a.at(i));
    return make_node(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        if (!wants(n, 0)) return;
        auto& dx = n.parents[0]->grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) dx[i] += n.grad[i] * n.value[i];
    });
}

Tensor log_t(const Tensor& a) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::log(a.at(i));
    return make_node(a.shape(), std::move(v), {a}, [](TensorNode& n) {
        if (!wants(n, 0)) return;
        const auto& x = n.parents[0]->value;
        auto& dx = n.parents[0]->grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i) dx[i] += n.grad[i] / x[i];
    });
}

Tensor clamp_t(const Tensor& a, double lo, double hi) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(a.at(i), lo, hi);
    return make_node(a.shape(), std::move(v), {a}, [lo, hi](TensorNode& n) {
        if (!wants(n, 0)) return;
        const auto& x = n.parents[0]->value;
        auto& dx = n.parents[0]->grad;
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (x[i] >= lo && x[i] <= hi) dx[i] += n.grad[i];
    });
}

Tensor sum_all(const Tensor& a) {
    const double s = kern::active().sum(a.values().data(), a.numel());
    return make_node({1}, {s}, {a}, [](TensorNode& n) {
        if (!wants(n, 0)) return;
        auto& dx = n.parents[0]->grad;
        const double g = n.grad[0];
        for (double& d : dx) d += g;
    });
}

Tensor mean_all(const Tensor& a) {
    const double s = kern::active().sum(a.values().data(), a.numel());
    const double inv = 1.0 / static_cast<double>(a.numel());
    return make_node({1}, {s * inv}, {a}, [inv](TensorNode& n) {
        if (!wants(n, 0)) return;
        auto& dx = n.parents[0]->grad;
        const double g = n.grad[0] * inv;
        for (double& d : dx) d += g;
    });
}

Tensor row_sum(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> v(m);
    for (std::size_t i = 0; i < m; ++i)
        v[i] = kern::active().sum(a.values().data() + i * n, n);
    return make_node({m, 1}, std::move(v), {a}, [m, n](TensorNode& node) {
        if (!wants(node, 0)) return;
        auto& dx = node.parents[0]->grad;
        for (std::size_t i = 0; i < m; ++i) {
            const double g = node.grad[i];
            double* row = dx.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += g;
        }
    });
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
    const std::size_t m = a.rows(), n = a.cols();
    if (start + len > n) {
        throw shape_error("slice_cols: [" + std::to_string(start) + ", " +
                          std::to_string(start + len) + ") out of range for " +
                          shape_str(a.shape()));
    }
    std::vector<double> v(m * len);
    for (std::size_t i = 0; i < m; ++i)
        std::copy_n(a.values().data() + i * n + start, len, v.data() + i * len);
    return make_node({m, len}, std::move(v), {a}, [m, n, start, len](TensorNode& node) {
        if (!wants(node, 0)) return;
        auto& dx = node.parents[0]->grad;
        for (std::size_t i = 0; i < m; ++i)
            kern::active().axpy(1.0, node.grad.data() + i * len,
                                dx.data() + i * n + start, len);
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw contract_error("concat_cols: no tensors given");
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != m)
            throw shape_error("concat_cols: row counts differ, " + shape_str(p.shape()));
        total += p.cols();
    }
    std::vector<double> v(m * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t n = p.cols();
        for (std::size_t i = 0; i < m; ++i)
            std::copy_n(p.values().data() + i * n, n, v.data() + i * total + off);
        off += n;
    }
    std::vector<std::size_t> widths;
    for (const auto& p : parts) widths.push_back(p.cols());
    return make_node({m, total}, std::move(v), parts, [m, total, widths](TensorNode& node) {
        std::size_t off = 0;
        for (std::size_t pi = 0; pi < node.parents.size(); ++pi) {
            const std::size_t n = widths[pi];
            if (node.parents[pi]->requires_grad) {
                auto& dx = node.parents[pi]->grad;
                for (std::size_t i = 0; i < m; ++i)
                    kern::active().axpy(1.0, node.grad.data() + i * total + off,
                                        dx.data() + i * n, n);
            }
            off += n;
        }
    });
}

Tensor take_rows(const Tensor& a, const std::vector<std::size_t>& idx) {
    const std::size_t m = a.rows(), n = a.cols();
    for (std::size_t i : idx)
        if (i >= m) throw shape_error("take_rows: index " + std::to_string(i) +
                                      " out of range for " + shape_str(a.shape()));
    std::vector<double> v(idx.size() * n);
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy_n(a.values().data() + idx[r] * n, n, v.data() + r * n);
    return make_node({idx.size(), n}, std::move(v), {a}, [idx, n](TensorNode& node) {
        if (!wants(node, 0)) return;
        auto& dx = node.parents[0]->grad;
        for (std::size_t r = 0; r < idx.size(); ++r)
            kern::active().axpy(1.0, node.grad.data() + r * n, dx.data() + idx[r] * n, n);
    });
}

Tensor log_softmax_groups(const Tensor& a, std::size_t group) {
    const std::size_t m = a.rows(), n = a.cols();
    if (group == 0 || n % group != 0)
        throw shape_error("log_softmax_groups: columns " + std::to_string(n) +
                          " not divisible by group " + std::to_string(group));
    std::vector<double> v(m * n);
    const double* x = a.values().data();
    for (std::size_t base = 0; base < m * n; base += group) {
        double mx = x[base];
        for (std::size_t j = 1; j < group; ++j) mx = std::max(mx, x[base + j]);
        double se = 0.0;
        for (std::size_t j = 0; j < group; ++j) se += std::exp(x[base + j] - mx);
        const double lse = mx + std::log(se);
        for (std::size_t j = 0; j < group; ++j) v[base + j] = x[base + j] - lse;
    }
    return make_node(a.shape(), std::move(v), {a}, [group](TensorNode& node) {
        if (!wants(node, 0)) return;
        auto& dx = node.parents[0]->grad;
        const std::size_t total = node.value.size();
        for (std::size_t base = 0; base < total; base += group) {
            double gsum = 0.0;
            for (std::size_t j = 0; j < group; ++j) gsum += node.grad[base + j];
            for (std::size_t j = 0; j < group; ++j)
                dx[base + j] += node.grad[base + j] - std::exp(node.value[base + j]) * gsum;
        }
    });
}

}  // namespace mmvb::core
