#include "mmvb/kernels/kernels.hpp"

// AVX2/FMA kernels. This translation unit is the only one compiled with
// -mavx2 -mfma; nothing here may be called unless cpu_supports_avx2().

#include <immintrin.h>

namespace mmvb::kern {
namespace {

constexpr std::size_t kColBlock = 512;  // B/C column tile, keeps the hot tile in L2

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// Accumulate crow[j0,j1) += sum over kk of a_k * brow_k, four k at a time.
inline void axpy4_block(const double* a4, const double* b, std::size_t n,
                        std::size_t kk, std::size_t kcnt, double* crow,
                        std::size_t j0, std::size_t j1) {
    if (kcnt == 4) {
        const __m256d a0 = _mm256_set1_pd(a4[0]);
        const __m256d a1 = _mm256_set1_pd(a4[1]);
        const __m256d a2 = _mm256_set1_pd(a4[2]);
        const __m256d a3 = _mm256_set1_pd(a4[3]);
        const double* b0 = b + (kk + 0) * n;
        const double* b1 = b + (kk + 1) * n;
        const double* b2 = b + (kk + 2) * n;
        const double* b3 = b + (kk + 3) * n;
        std::size_t j = j0;
        for (; j + 4 <= j1; j += 4) {
            __m256d cv = _mm256_loadu_pd(crow + j);
            cv = _mm256_fmadd_pd(a0, _mm256_loadu_pd(b0 + j), cv);
            cv = _mm256_fmadd_pd(a1, _mm256_loadu_pd(b1 + j), cv);
            cv = _mm256_fmadd_pd(a2, _mm256_loadu_pd(b2 + j), cv);
            cv = _mm256_fmadd_pd(a3, _mm256_loadu_pd(b3 + j), cv);
            _mm256_storeu_pd(crow + j, cv);
        }
        for (; j < j1; ++j)
            crow[j] += a4[0] * b0[j] + a4[1] * b1[j] + a4[2] * b2[j] + a4[3] * b3[j];
    } else {
        for (std::size_t q = 0; q < kcnt; ++q) {
            const __m256d av = _mm256_set1_pd(a4[q]);
            const double* brow = b + (kk + q) * n;
            std::size_t j = j0;
            for (; j + 4 <= j1; j += 4) {
                __m256d cv = _mm256_loadu_pd(crow + j);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), cv);
                _mm256_storeu_pd(crow + j, cv);
            }
            for (; j < j1; ++j) crow[j] += a4[q] * brow[j];
        }
    }
}

void gemm_nn_avx2(const double* a, const double* b, double* c, std::size_t,
                  std::size_t m0, std::size_t m1, std::size_t k, std::size_t n) {
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
        const std::size_t j1 = j0 + kColBlock < n ? j0 + kColBlock : n;
        for (std::size_t i = m0; i < m1; ++i) {
            const double* arow = a + i * k;
            double* crow = c + i * n;
            std::size_t kk = 0;
            for (; kk + 4 <= k; kk += 4) axpy4_block(arow + kk, b, n, kk, 4, crow, j0, j1);
            if (kk < k) axpy4_block(arow + kk, b, n, kk, k - kk, crow, j0, j1);
        }
    }
}

void gemm_nt_avx2(const double* a, const double* b, double* c, std::size_t,
                  std::size_t m0, std::size_t m1, std::size_t k, std::size_t n) {
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
        const std::size_t j1 = j0 + kColBlock < n ? j0 + kColBlock : n;
        for (std::size_t i = m0; i < m1; ++i) {
            const double* arow = a + i * k;
            double* crow = c + i * n;
            for (std::size_t j = j0; j < j1; ++j) {
                const double* brow = b + j * k;
                __m256d s0 = _mm256_setzero_pd();
                __m256d s1 = _mm256_setzero_pd();
                std::size_t kk = 0;
                for (; kk + 8 <= k; kk += 8) {
                    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + kk),
                                         _mm256_loadu_pd(brow + kk), s0);
                    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + kk + 4),
                                         _mm256_loadu_pd(brow + kk + 4), s1);
                }
                for (; kk + 4 <= k; kk += 4)
                    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(arow + kk),
                                         _mm256_loadu_pd(brow + kk), s0);
                double acc = hsum(_mm256_add_pd(s0, s1));
                for (; kk < k; ++kk) acc += arow[kk] * brow[kk];
                crow[j] += acc;
            }
        }
    }
}

void gemm_tn_avx2(const double* a, const double* b, double* c, std::size_t m,
                  std::size_t m0, std::size_t m1, std::size_t k, std::size_t n) {
    // a is (k x m); gather the strided column into a tiny stack buffer so the
    // inner loop is the same 4-row fused axpy as gemm_nn.
    double acol[4];
    for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
        const std::size_t j1 = j0 + kColBlock < n ? j0 + kColBlock : n;
        for (std::size_t i = m0; i < m1; ++i) {
            double* crow = c + i * n;
            std::size_t kk = 0;
            for (; kk + 4 <= k; kk += 4) {
                acol[0] = a[(kk + 0) * m + i];
                acol[1] = a[(kk + 1) * m + i];
                acol[2] = a[(kk + 2) * m + i];
                acol[3] = a[(kk + 3) * m + i];
                axpy4_block(acol, b, n, kk, 4, crow, j0, j1);
            }
            if (kk < k) {
                for (std::size_t q = 0; q < k - kk; ++q) acol[q] = a[(kk + q) * m + i];
                axpy4_block(acol, b, n, kk, k - kk, crow, j0, j1);
            }
        }
    }
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i,
                         _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                                _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d s = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) s = _mm256_add_pd(s, _mm256_loadu_pd(x + i));
    double acc = hsum(s);
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double sq_diff_sum_avx2(const double* a, const double* b, std::size_t n) {
    __m256d s = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        s = _mm256_fmadd_pd(d, d, s);
    }
    double acc = hsum(s);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t = {
        "avx2",    &gemm_nn_avx2, &gemm_nt_avx2,     &gemm_tn_avx2, &add_avx2,
        &sub_avx2, &mul_avx2,     &axpy_avx2,        &sum_avx2,     &sq_diff_sum_avx2,
    };
    return t;
}

}  // namespace mmvb::kern
