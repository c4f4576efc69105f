#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops used by the autodiff layers. Every kernel has a
// scalar reference implementation; ISA-specific variants are selected once at
// runtime and must agree with the reference to rounding.
//
// All matrix kernels *accumulate* into their output.

namespace demonet::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
    Isa isa;

    /// y[i] += alpha * x[i]
    void (*axpy)(std::size_t n, double alpha, const double* x, double* y);

    /// sum_i x[i] * y[i]
    double (*dot)(std::size_t n, const double* x, const double* y);

    /// C(m x n) += A(m x k) * B(k x n).
    /// A(i, p) lives at a[i * a_row_stride + p * a_col_stride]; B and C are
    /// row-major with leading dimensions ldb / ldc. Covers both A and A^T.
    void (*gemm_bcast)(std::size_t m, std::size_t n, std::size_t k,
                       const double* a, std::size_t a_row_stride, std::size_t a_col_stride,
                       const double* b, std::size_t ldb,
                       double* c, std::size_t ldc);

    /// C(m x n) += A(m x k) * B(n x k)^T, both operands row-major.
    void (*gemm_dot)(std::size_t m, std::size_t n, std::size_t k,
                     const double* a, std::size_t lda,
                     const double* b, std::size_t ldb,
                     double* c, std::size_t ldc);

    /// y[i] = max(x[i], 0)
    void (*relu_forward)(std::size_t n, const double* x, double* y);

    /// gx[i] += x[i] > 0 ? gy[i] : 0
    void (*relu_backward)(std::size_t n, const double* x, const double* gy, double* gx);
};

const KernelTable& scalar_kernels();

/// Null when the build or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// The table used by the library. Picks the widest supported ISA unless the
/// environment variable DEMONET_SIMD=scalar is set.
const KernelTable& kernels();

/// Overrides the active table; returns false if the ISA is unavailable.
bool force_isa(Isa isa);

}  // namespace demonet::simd
