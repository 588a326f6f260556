#include "mmvb/kernels/kernels.hpp"

// Reference kernels. Plain loops, no blocking; the equivalence tests hold the
// SIMD variants to these within 1e-12 relative error.

namespace mmvb::kern {
namespace {

void gemm_nn_ref(const double* a, const double* b, double* c, std::size_t,
                 std::size_t m0, std::size_t m1, std::size_t k, std::size_t n) {
    for (std::size_t i = m0; i < m1; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_nt_ref(const double* a, const double* b, double* c, std::size_t,
                 std::size_t m0, std::size_t m1, std::size_t k, std::size_t n) {
    for (std::size_t i = m0; i < m1; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = b + j * k;
            double acc = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] += acc;
        }
    }
}

void gemm_tn_ref(const double* a, const double* b, double* c, std::size_t m,
                 std::size_t m0, std::size_t m1, std::size_t k, std::size_t n) {
    for (std::size_t i = m0; i < m1; ++i) {
        double* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = a[kk * m + i];
            const double* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void add_ref(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_ref(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_ref(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_ref(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_ref(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double sq_diff_sum_ref(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable t = {
        "scalar",    &gemm_nn_ref, &gemm_nt_ref,     &gemm_tn_ref, &add_ref,
        &sub_ref,    &mul_ref,     &axpy_ref,        &sum_ref,     &sq_diff_sum_ref,
    };
    return t;
}

}  // namespace mmvb::kern
