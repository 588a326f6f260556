#pragma once

#include <vector>

#include "mmvb/core/tensor.hpp"

// Differentiable op library. Unless noted, tensors are treated as 2-D
// (rows() x cols()) and shapes must match exactly; mismatches throw
// shape_error naming both shapes.

namespace mmvb::core {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);

// (m x k) @ (k x n) -> (m x n)
Tensor matmul(const Tensor& a, const Tensor& b);
// mat (m x n) + row vector (n), broadcast over rows
Tensor add_row_broadcast(const Tensor& mat, const Tensor& vec);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp_t(const Tensor& a);
Tensor log_t(const Tensor& a);
// Hard clamp; gradient is zero outside [lo, hi].
Tensor clamp_t(const Tensor& a, double lo, double hi);

Tensor sum_all(const Tensor& a);   // -> {1}
Tensor mean_all(const Tensor& a);  // -> {1}
Tensor row_sum(const Tensor& a);   // (m x n) -> {m, 1}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor take_rows(const Tensor& a, const std::vector<std::size_t>& idx);

// log-softmax over contiguous groups of `group` columns (cols % group == 0).
Tensor log_softmax_groups(const Tensor& a, std::size_t group);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace mmvb::core
