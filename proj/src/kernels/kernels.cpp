#include "mmvb/kernels/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

namespace mmvb::kern {
namespace {

std::atomic<Backend> g_backend{Backend::auto_detect};
std::atomic<int> g_max_threads{0};  // 0 = uninitialized

Backend env_backend() {
    const char* v = std::getenv("MMVB_KERNEL_BACKEND");
    if (v == nullptr) return Backend::auto_detect;
    if (std::strcmp(v, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(v, "avx2") == 0) return Backend::avx2;
    return Backend::auto_detect;
}

int default_threads() {
    if (const char* v = std::getenv("MMVB_THREADS")) {
        const int t = std::atoi(v);
        if (t >= 1) return std::min(t, 16);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 4u));
}

Backend resolve(Backend b) {
    if (b == Backend::auto_detect) b = env_backend();
    if (b == Backend::auto_detect) b = cpu_supports_avx2() ? Backend::avx2 : Backend::scalar;
    if (b == Backend::avx2 && !cpu_supports_avx2()) b = Backend::scalar;
    return b;
}

using GemmFn = void (*)(const double*, const double*, double*, std::size_t,
                        std::size_t, std::size_t, std::size_t, std::size_t);

// Shard output rows [0, m) over worker threads. Each thread owns a disjoint
// row range of C, so the result does not depend on the thread count.
void run_sharded(GemmFn fn, const double* a, const double* b, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
    const int want = max_threads();
    const double flops = static_cast<double>(m) * static_cast<double>(k) * n;
    int t = want;
    if (flops < (1 << 20) || m < 2) t = 1;
    t = std::min<int>(t, static_cast<int>(m));
    if (t <= 1) {
        fn(a, b, c, m, 0, m, k, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(t) - 1);
    const std::size_t chunk = (m + t - 1) / t;
    for (int w = 1; w < t; ++w) {
        const std::size_t m0 = std::min(m, chunk * static_cast<std::size_t>(w));
        const std::size_t m1 = std::min(m, m0 + chunk);
        if (m0 >= m1) break;
        workers.emplace_back(fn, a, b, c, m, m0, m1, k, n);
    }
    fn(a, b, c, m, 0, std::min(m, chunk), k, n);
    for (auto& th : workers) th.join();
}

}  // namespace

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

void set_backend(Backend b) { g_backend.store(resolve(b)); }

Backend active_backend() {
    Backend b = g_backend.load();
    if (b == Backend::auto_detect) {
        b = resolve(b);
        g_backend.store(b);
    }
    return b;
}

const KernelTable& active() {
    return active_backend() == Backend::avx2 ? avx2_table() : scalar_table();
}

void set_max_threads(int t) { g_max_threads.store(std::clamp(t, 1, 16)); }

int max_threads() {
    int t = g_max_threads.load();
    if (t == 0) {
        t = default_threads();
        g_max_threads.store(t);
    }
    return t;
}

void gemm_nn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    run_sharded(active().gemm_nn, a, b, c, m, k, n);
}

void gemm_nt(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    run_sharded(active().gemm_nt, a, b, c, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c,
             std::size_t m, std::size_t k, std::size_t n) {
    run_sharded(active().gemm_tn, a, b, c, m, k, n);
}

}  // namespace mmvb::kern
