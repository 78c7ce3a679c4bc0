#include "gdl/linalg.hpp"

#include "gdl/simd.hpp"

#include <algorithm>

namespace gdl::linalg {

void matmul(const double *a, const double *b, double *c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate) {
    if (!accumulate) {
        std::fill(c, c + m * n, 0.0);
    }
    simd::gemm_acc(a, k, b, n, c, n, m, k, n);
}

void matmul_nt(const double *a, const double *b, double *c, std::size_t m, std::size_t n, std::size_t k,
               bool accumulate) {
    // b is [k x n]; multiply by its explicit transpose.
    thread_local std::vector<double> bt;
    if (bt.size() < n * k) {
        bt.resize(n * k);
    }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            bt[i * k + j] = b[j * n + i];
        }
    }
    matmul(a, bt.data(), c, m, n, k, accumulate);
}

void matmul_tn_acc(const double *a, const double *g, double *c, std::size_t m, std::size_t k, std::size_t n) {
    thread_local std::vector<double> at;
    if (at.size() < k * m) {
        at.resize(k * m);
    }
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            at[kk * m + r] = a[r * k + kk];
        }
    }
    simd::gemm_acc(at.data(), m, g, n, c, n, k, m, n);
}

void colsum_acc(const double *g, double *out, std::size_t m, std::size_t n) {
    const auto &kern = simd::active();
    for (std::size_t i = 0; i < m; ++i) {
        kern.axpy(1.0, g + i * n, out, n);
    }
}

void add_bias(double *out, const double *bias, std::size_t m, std::size_t n) {
    const auto &kern = simd::active();
    for (std::size_t i = 0; i < m; ++i) {
        kern.axpy(1.0, bias, out + i * n, n);
    }
}

} // namespace gdl::linalg
