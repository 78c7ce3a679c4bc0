#pragma once

// Row-major matrix products built on the dispatched simd kernels. Every output
// row depends only on the matching input row, with a fixed summation order,
// so per-row results do not depend on how many rows are in a batch.

#include <cstddef>
#include <vector>

namespace gdl::linalg {

// c[m x n] = a[m x k] * b[k x n]   (c += ... when accumulate)
void matmul(const double *a, const double *b, double *c, std::size_t m, std::size_t k, std::size_t n,
            bool accumulate = false);

// c[m x k] = a[m x n] * b[k x n]^T   (c += ... when accumulate)
void matmul_nt(const double *a, const double *b, double *c, std::size_t m, std::size_t n, std::size_t k,
               bool accumulate = false);

// c[k x n] += a[m x k]^T * g[m x n]
void matmul_tn_acc(const double *a, const double *g, double *c, std::size_t m, std::size_t k, std::size_t n);

// out[n] += column sums of g[m x n]
void colsum_acc(const double *g, double *out, std::size_t m, std::size_t n);

// out[m x n] += broadcast bias[n]
void add_bias(double *out, const double *bias, std::size_t m, std::size_t n);

} // namespace gdl::linalg
