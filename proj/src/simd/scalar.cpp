#include "gdl/simd.hpp"

#include <cmath>

namespace gdl::simd {
namespace {

double dot_scalar(const double *a, const double *b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy_scalar(double alpha, const double *x, double *y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void vecmat_acc_scalar(const double *a, const double *b, std::size_t k, std::size_t n, std::size_t ldb,
                       double *c) {
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double s = a[kk];
        const double *row = b + kk * ldb;
        for (std::size_t j = 0; j < n; ++j) {
            c[j] += s * row[j];
        }
    }
}

void gemm_acc_scalar(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
                     std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        vecmat_acc_scalar(a + i * lda, b, k, n, ldb, c + i * ldc);
    }
}

void silu_scalar(const double *x, double *sig, double *act, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        sig[i] = 1.0 / (1.0 + std::exp(-x[i]));
        act[i] = x[i] * sig[i];
    }
}

} // namespace

const KernelTable &scalar_kernels() {
    static const KernelTable table{"scalar", dot_scalar, axpy_scalar, vecmat_acc_scalar, gemm_acc_scalar, silu_scalar};
    return table;
}

} // namespace gdl::simd
