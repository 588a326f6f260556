#pragma once

#include <cstddef>

// Dense double-precision kernels behind the tensor layer. Every kernel has a
// scalar reference implementation and an AVX2 variant; the active table is
// picked at runtime from CPUID (override with set_backend or MMVB_KERNEL_BACKEND).
// GEMM entry points additionally shard output rows across a small number of
// threads. Results are deterministic for a fixed backend: each output element
// is produced by exactly one thread with a fixed reduction order.

namespace mmvb::kern {

enum class Backend { auto_detect, scalar, avx2 };

// Row-major matrices throughout. All gemm kernels accumulate (C += ...) and
// compute only output rows [m0, m1); callers pass full matrices and the full
// output row count m (the column stride of A in the tn case).
struct KernelTable {
    const char* name;
    // C(m x n) += A(m x k) * B(k x n)
    void (*gemm_nn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t m0, std::size_t m1, std::size_t k, std::size_t n);
    // C(m x n) += A(m x k) * B(n x k)^T
    void (*gemm_nt)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t m0, std::size_t m1, std::size_t k, std::size_t n);
    // C(m x n) += A(k x m)^T * B(k x n)
    void (*gemm_tn)(const double* a, const double* b, double* c, std::size_t m,
                    std::size_t m0, std::size_t m1, std::size_t k, std::size_t n);
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    // sum((a - b)^2)
    double (*sq_diff_sum)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_table();
const KernelTable& avx2_table();

bool cpu_supports_avx2();

void set_backend(Backend b);
Backend active_backend();          // resolved, never auto_detect
const KernelTable& active();

void set_max_threads(int t);       // clamped to [1, 16]
int max_threads();

// Threaded front ends used by the tensor layer (full output, rows [0, m)).
void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n);

}  // namespace mmvb::kern
