// Compiled with -mavx2 -mfma. Nothing in here may run before
// cpu_supports_avx2() has returned true.

#include "gdl/simd.hpp"

#include <immintrin.h>

#include <cmath>

namespace gdl::simd {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double *a, const double *b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) {
        s += a[i] * b[i];
    }
    return s;
}

void axpy_avx2(double alpha, const double *x, double *y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

// Column blocks of 16 stay in four accumulators while kk sweeps the rows of b.
void vecmat_acc_avx2(const double *a, const double *b, std::size_t k, std::size_t n, std::size_t ldb,
                     double *c) {
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
        __m256d c0 = _mm256_loadu_pd(c + j);
        __m256d c1 = _mm256_loadu_pd(c + j + 4);
        __m256d c2 = _mm256_loadu_pd(c + j + 8);
        __m256d c3 = _mm256_loadu_pd(c + j + 12);
        const double *col = b + j;
        for (std::size_t kk = 0; kk < k; ++kk, col += ldb) {
            const __m256d s = _mm256_broadcast_sd(a + kk);
            c0 = _mm256_fmadd_pd(s, _mm256_loadu_pd(col), c0);
            c1 = _mm256_fmadd_pd(s, _mm256_loadu_pd(col + 4), c1);
            c2 = _mm256_fmadd_pd(s, _mm256_loadu_pd(col + 8), c2);
            c3 = _mm256_fmadd_pd(s, _mm256_loadu_pd(col + 12), c3);
        }
        _mm256_storeu_pd(c + j, c0);
        _mm256_storeu_pd(c + j + 4, c1);
        _mm256_storeu_pd(c + j + 8, c2);
        _mm256_storeu_pd(c + j + 12, c3);
    }
    for (; j + 4 <= n; j += 4) {
        __m256d c0 = _mm256_loadu_pd(c + j);
        const double *col = b + j;
        for (std::size_t kk = 0; kk < k; ++kk, col += ldb) {
            c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a + kk), _mm256_loadu_pd(col), c0);
        }
        _mm256_storeu_pd(c + j, c0);
    }
    for (; j < n; ++j) {
        double s = c[j];
        for (std::size_t kk = 0; kk < k; ++kk) {
            s += a[kk] * b[kk * ldb + j];
        }
        c[j] = s;
    }
}

// R rows x 8 columns held in 2R accumulators; each b load feeds R FMAs.
template <std::size_t R>
inline void gemm_tile_8(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c,
                        std::size_t ldc, std::size_t k) {
    __m256d lo[R];
    __m256d hi[R];
    for (std::size_t r = 0; r < R; ++r) {
        lo[r] = _mm256_loadu_pd(c + r * ldc);
        hi[r] = _mm256_loadu_pd(c + r * ldc + 4);
    }
    for (std::size_t kk = 0; kk < k; ++kk) {
        const __m256d b0 = _mm256_loadu_pd(b + kk * ldb);
        const __m256d b1 = _mm256_loadu_pd(b + kk * ldb + 4);
        for (std::size_t r = 0; r < R; ++r) {
            const __m256d s = _mm256_broadcast_sd(a + r * lda + kk);
            lo[r] = _mm256_fmadd_pd(s, b0, lo[r]);
            hi[r] = _mm256_fmadd_pd(s, b1, hi[r]);
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        _mm256_storeu_pd(c + r * ldc, lo[r]);
        _mm256_storeu_pd(c + r * ldc + 4, hi[r]);
    }
}

template <std::size_t R>
inline void gemm_tile_4(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c,
                        std::size_t ldc, std::size_t k) {
    __m256d acc[R];
    for (std::size_t r = 0; r < R; ++r) {
        acc[r] = _mm256_loadu_pd(c + r * ldc);
    }
    for (std::size_t kk = 0; kk < k; ++kk) {
        const __m256d b0 = _mm256_loadu_pd(b + kk * ldb);
        for (std::size_t r = 0; r < R; ++r) {
            acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * lda + kk), b0, acc[r]);
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        _mm256_storeu_pd(c + r * ldc, acc[r]);
    }
}

template <std::size_t R>
void gemm_rows(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
               std::size_t k, std::size_t n) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
        gemm_tile_8<R>(a, lda, b + j, ldb, c + j, ldc, k);
    }
    for (; j + 4 <= n; j += 4) {
        gemm_tile_4<R>(a, lda, b + j, ldb, c + j, ldc, k);
    }
    for (; j < n; ++j) {
        for (std::size_t r = 0; r < R; ++r) {
            double s = c[r * ldc + j];
            for (std::size_t kk = 0; kk < k; ++kk) {
                s = __builtin_fma(a[r * lda + kk], b[kk * ldb + j], s);
            }
            c[r * ldc + j] = s;
        }
    }
}

void gemm_acc_avx2(const double *a, std::size_t lda, const double *b, std::size_t ldb, double *c, std::size_t ldc,
                   std::size_t m, std::size_t k, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        gemm_rows<4>(a + i * lda, lda, b, ldb, c + i * ldc, ldc, k, n);
    }
    for (; i < m; ++i) {
        gemm_rows<1>(a + i * lda, lda, b, ldb, c + i * ldc, ldc, k, n);
    }
}

// exp on four lanes: x = k ln2 + r with |r| <= ln2/2, then the Cephes rational
// approximation for e^r and an exponent-field scale by 2^k. Input is clamped
// to [-708, 708], so no lane overflows or goes subnormal.
inline __m256d exp4(__m256d x) {
    const __m256d p0 = _mm256_set1_pd(1.26177193074810590878e-4);
    const __m256d p1 = _mm256_set1_pd(3.02994407707441961300e-2);
    const __m256d p2 = _mm256_set1_pd(9.99999999999999999910e-1);
    const __m256d q0 = _mm256_set1_pd(3.00198505138664455042e-6);
    const __m256d q1 = _mm256_set1_pd(2.52448340349684104192e-3);
    const __m256d q2 = _mm256_set1_pd(2.27265548208155028766e-1);
    const __m256d q3 = _mm256_set1_pd(2.00000000000000000009e0);
    x = _mm256_min_pd(_mm256_max_pd(x, _mm256_set1_pd(-708.0)), _mm256_set1_pd(708.0));
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93145751953125e-1), x);
    r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.42860682030941723212e-6), r);
    const __m256d rr = _mm256_mul_pd(r, r);
    const __m256d px = _mm256_mul_pd(r, _mm256_fmadd_pd(_mm256_fmadd_pd(p0, rr, p1), rr, p2));
    const __m256d qx = _mm256_fmadd_pd(_mm256_fmadd_pd(_mm256_fmadd_pd(q0, rr, q1), rr, q2), rr, q3);
    const __m256d e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), _mm256_div_pd(px, _mm256_sub_pd(qx, px)),
                                      _mm256_set1_pd(1.0));
    // 2^k through the exponent bits; k is integral and within [-1022, 1022].
    const __m128i k32 = _mm256_cvtpd_epi32(k);
    const __m256i k64 = _mm256_cvtepi32_epi64(k32);
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
}

void silu_avx2(const double *x, double *sig, double *act, std::size_t n) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        const __m256d s = _mm256_div_pd(one, _mm256_add_pd(one, exp4(_mm256_sub_pd(zero, v))));
        _mm256_storeu_pd(sig + i, s);
        _mm256_storeu_pd(act + i, _mm256_mul_pd(v, s));
    }
    for (; i < n; ++i) {
        sig[i] = 1.0 / (1.0 + std::exp(-x[i]));
        act[i] = x[i] * sig[i];
    }
}

} // namespace

const KernelTable *avx2_kernels() {
    static const KernelTable table{"avx2", dot_avx2, axpy_avx2, vecmat_acc_avx2, gemm_acc_avx2, silu_avx2};
    return &table;
}

} // namespace gdl::simd
