#include "demonet/simd/kernels.hpp"

namespace demonet::simd {
namespace {

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void gemm_bcast_scalar(std::size_t m, std::size_t n, std::size_t k,
                       const double* a, std::size_t rs, std::size_t cs,
                       const double* b, std::size_t ldb,
                       double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * ldc;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * rs + p * cs];
            const double* brow = b + p * ldb;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_dot_scalar(std::size_t m, std::size_t n, std::size_t k,
                     const double* a, std::size_t lda,
                     const double* b, std::size_t ldb,
                     double* c, std::size_t ldc) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            c[i * ldc + j] += dot_scalar(k, a + i * lda, b + j * ldb);
}

void relu_forward_scalar(std::size_t n, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_scalar(std::size_t n, const double* x, const double* gy, double* gx) {
    for (std::size_t i = 0; i < n; ++i)
        if (x[i] > 0.0) gx[i] += gy[i];
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{
        Isa::scalar,      axpy_scalar,         dot_scalar,           gemm_bcast_scalar,
        gemm_dot_scalar,  relu_forward_scalar, relu_backward_scalar,
    };
    return table;
}

}  // namespace demonet::simd
