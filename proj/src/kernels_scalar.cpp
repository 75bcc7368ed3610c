#include "surgkin/kernels.hpp"

// Reference kernels. These define the numeric contract: the SIMD variants
// must reproduce them bit for bit, so the loops below mirror the vector
// lane structure (4-wide blocks, fixed reduction order). Compile with
// fp-contract off so a*b+c rounds the same everywhere.

namespace surgkin {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        y[i] += a * x[i];
        y[i + 1] += a * x[i + 1];
        y[i + 2] += a * x[i + 2];
        y[i + 3] += a * x[i + 3];
    }
    for (std::size_t i = n4; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t n4 = n & ~std::size_t(3);
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 += x[i] * y[i];
        s1 += x[i + 1] * y[i + 1];
        s2 += x[i + 2] * y[i + 2];
        s3 += x[i + 3] * y[i + 3];
    }
    for (std::size_t i = n4; i < n; ++i) {
        switch (i - n4) {
            case 0: s0 += x[i] * y[i]; break;
            case 1: s1 += x[i] * y[i]; break;
            default: s2 += x[i] * y[i]; break;
        }
    }
    return (s0 + s2) + (s1 + s3);
}

void matmul_scalar(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_scalar(a[p], B + p * n, c, n);
    }
}

void matmul_nt_scalar(const double* A, const double* B, double* C,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] = dot_scalar(a, B + j * k, k);
    }
}


void matmul_acc_scalar(const double* A, const double* B, double* C,
                  std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_scalar(a[p], B + p * n, c, n);
    }
}

void matmul_nt_acc_scalar(const double* A, const double* B, double* C,
                     std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += dot_scalar(a, B + j * k, k);
    }
}

void matmul_tn_acc_scalar(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < m; ++p) {
        const double* a = A + p * k;
        const double* b = B + p * n;
        for (std::size_t i = 0; i < k; ++i) axpy_scalar(a[i], b, C + i * n, n);
    }
}

}  // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{axpy_scalar, dot_scalar, matmul_scalar, matmul_acc_scalar,
                           matmul_nt_scalar, matmul_nt_acc_scalar, matmul_tn_acc_scalar, "scalar"};
    return k;
}

}  // namespace surgkin
