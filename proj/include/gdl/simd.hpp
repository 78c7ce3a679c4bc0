#pragma once

// Dense double-precision kernels used by the network substrate.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled separately and picked at runtime when the CPU supports
// it. Results between variants agree to rounding (FMA contraction and lane
// ordering differ), never bit-for-bit, so bit-exactness guarantees elsewhere
// in the library hold for a fixed kernel table only.

#include <cstddef>
#include <string_view>

namespace gdl::simd {

struct KernelTable {
    const char *name;
    // sum_i a[i] * b[i]
    double (*dot)(const double *a, const double *b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double *x, double *y, std::size_t n);
    // c[j] += sum_kk a[kk] * b[kk * ldb + j], j in [0, n)
    void (*vecmat_acc)(const double *a, const double *b, std::size_t k, std::size_t n, std::size_t ldb,
                       double *c);
    // c[i*ldc + j] += sum_kk a[i*lda + kk] * b[kk*ldb + j], i < m, j < n.
    // Element (i, j) is accumulated in kk order by the same operation sequence
    // whatever m is, so a row's result never depends on its neighbours.
    void (*gemm_acc)(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
                     std::size_t m, std::size_t k, std::size_t n);
    // sig[i] = 1 / (1 + exp(-x[i])), act[i] = x[i] * sig[i]
    void (*silu)(const double *x, double *sig, double *act, std::size_t n);
};

const KernelTable &scalar_kernels();

// nullptr when the variant was not compiled in.
const KernelTable *avx2_kernels();

bool cpu_supports_avx2();

// The table all library code calls through. Chosen once at startup: the
// GDL_KERNELS environment variable ("scalar", "avx2", "auto") overrides
// detection.
const KernelTable &active();

// Switch the active table. Not thread-safe; intended for tests and the CLI.
// Returns false if the requested variant is unavailable on this machine.
bool select(std::string_view name);

inline double dot(const double *a, const double *b, std::size_t n) { return active().dot(a, b, n); }

inline void axpy(double alpha, const double *x, double *y, std::size_t n) { active().axpy(alpha, x, y, n); }

inline void vecmat_acc(const double *a, const double *b, std::size_t k, std::size_t n, std::size_t ldb,
                       double *c) {
    active().vecmat_acc(a, b, k, n, ldb, c);
}

inline void gemm_acc(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
                     std::size_t m, std::size_t k, std::size_t n) {
    active().gemm_acc(a, lda, b, ldb, c, ldc, m, k, n);
}

inline void silu(const double *x, double *sig, double *act, std::size_t n) { active().silu(x, sig, act, n); }

} // namespace gdl::simd
