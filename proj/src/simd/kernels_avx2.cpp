// Compiled with -mavx2 -mfma. Nothing in this file may run before
// avx2_kernels() has confirmed CPU support.

#include "demonet/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#define DEMONET_HAVE_AVX2 1
#include <immintrin.h>
#else
#define DEMONET_HAVE_AVX2 0
#endif

namespace demonet::simd {

#if DEMONET_HAVE_AVX2
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        _mm256_storeu_pd(y + i + 4,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
    }
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
    __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), s1);
        s2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), s2);
        s3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), s3);
    }
    for (; i + 4 <= n; i += 4) s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    double s = hsum(_mm256_add_pd(_mm256_add_pd(s0, s1), _mm256_add_pd(s2, s3)));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

// MR rows of C times 8 columns, accumulating over kc terms.
template <int MR>
inline void bcast_block8(std::size_t kc, const double* a, std::size_t rs, std::size_t cs,
                         const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    __m256d acc0[MR], acc1[MR];
    for (int r = 0; r < MR; ++r) {
        acc0[r] = _mm256_loadu_pd(c + r * ldc);
        acc1[r] = _mm256_loadu_pd(c + r * ldc + 4);
    }
    for (std::size_t p = 0; p < kc; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
        const __m256d b1 = _mm256_loadu_pd(b + p * ldb + 4);
        for (int r = 0; r < MR; ++r) {
            const __m256d av = _mm256_broadcast_sd(a + r * rs + p * cs);
            acc0[r] = _mm256_fmadd_pd(av, b0, acc0[r]);
            acc1[r] = _mm256_fmadd_pd(av, b1, acc1[r]);
        }
    }
    for (int r = 0; r < MR; ++r) {
        _mm256_storeu_pd(c + r * ldc, acc0[r]);
        _mm256_storeu_pd(c + r * ldc + 4, acc1[r]);
    }
}

template <int MR>
inline void bcast_block4(std::size_t kc, const double* a, std::size_t rs, std::size_t cs,
                         const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    __m256d acc[MR];
    for (int r = 0; r < MR; ++r) acc[r] = _mm256_loadu_pd(c + r * ldc);
    for (std::size_t p = 0; p < kc; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * ldb);
        for (int r = 0; r < MR; ++r)
            acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * rs + p * cs), b0, acc[r]);
    }
    for (int r = 0; r < MR; ++r) _mm256_storeu_pd(c + r * ldc, acc[r]);
}

template <int MR>
inline void bcast_tail(std::size_t kc, std::size_t cols, const double* a, std::size_t rs,
                       std::size_t cs, const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    for (int r = 0; r < MR; ++r)
        for (std::size_t j = 0; j < cols; ++j) {
            double s = c[r * ldc + j];
            for (std::size_t p = 0; p < kc; ++p) s += a[r * rs + p * cs] * b[p * ldb + j];
            c[r * ldc + j] = s;
        }
}

template <int MR>
inline void bcast_rows(std::size_t n, std::size_t kc, const double* a, std::size_t rs, std::size_t cs,
                       const double* b, std::size_t ldb, double* c, std::size_t ldc) {
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) bcast_block8<MR>(kc, a, rs, cs, b + j, ldb, c + j, ldc);
    for (; j + 4 <= n; j += 4) bcast_block4<MR>(kc, a, rs, cs, b + j, ldb, c + j, ldc);
    if (j < n) bcast_tail<MR>(kc, n - j, a, rs, cs, b + j, ldb, c + j, ldc);
}

void gemm_bcast_avx2(std::size_t m, std::size_t n, std::size_t k,
                     const double* a, std::size_t rs, std::size_t cs,
                     const double* b, std::size_t ldb,
                     double* c, std::size_t ldc) {
    // Panels of B are kept hot while every row block of A streams past them.
    constexpr std::size_t kBlockK = 256;
    constexpr std::size_t kBlockN = 256;
    for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
        const std::size_t kc = p0 + kBlockK <= k ? kBlockK : k - p0;
        for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
            const std::size_t nc = j0 + kBlockN <= n ? kBlockN : n - j0;
            const double* bp = b + p0 * ldb + j0;
            std::size_t i = 0;
            for (; i + 4 <= m; i += 4)
                bcast_rows<4>(nc, kc, a + i * rs + p0 * cs, rs, cs, bp, ldb, c + i * ldc + j0, ldc);
            for (; i < m; ++i)
                bcast_rows<1>(nc, kc, a + i * rs + p0 * cs, rs, cs, bp, ldb, c + i * ldc + j0, ldc);
        }
    }
}

void gemm_dot_avx2(std::size_t m, std::size_t n, std::size_t k,
                   const double* a, std::size_t lda,
                   const double* b, std::size_t ldb,
                   double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) c[i * ldc + j] += dot_avx2(k, a + i * lda, b + j * ldb);
}

void relu_forward_avx2(std::size_t n, const double* x, double* y) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // max_pd returns the second operand when the first is NaN; keep NaN out of the mask.
        const __m256d v = _mm256_loadu_pd(x + i);
        _mm256_storeu_pd(y + i, _mm256_and_pd(v, _mm256_cmp_pd(v, zero, _CMP_GT_OQ)));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_avx2(std::size_t n, const double* x, const double* gy, double* gx) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d g = _mm256_and_pd(_mm256_loadu_pd(gy + i), mask);
        _mm256_storeu_pd(gx + i, _mm256_add_pd(_mm256_loadu_pd(gx + i), g));
    }
    for (; i < n; ++i)
        if (x[i] > 0.0) gx[i] += gy[i];
}

}  // namespace

const KernelTable* avx2_kernels() {
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    static const KernelTable table{
        Isa::avx2,      axpy_avx2,         dot_avx2,           gemm_bcast_avx2,
        gemm_dot_avx2,  relu_forward_avx2, relu_backward_avx2,
    };
    return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace demonet::simd
