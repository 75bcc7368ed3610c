#if defined(__aarch64__)

#include <arm_neon.h>

#include "surgkin/kernels.hpp"

// NEON variants (2-wide doubles, processed as two registers per 4-block so
// lane structure and reduction order match the scalar reference).

namespace surgkin {
namespace {

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    std::size_t n4 = n & ~std::size_t(3);
    float64x2_t va = vdupq_n_f64(a);
    for (std::size_t i = 0; i < n4; i += 4) {
        float64x2_t y0 = vld1q_f64(y + i);
        float64x2_t y1 = vld1q_f64(y + i + 2);
        y0 = vaddq_f64(y0, vmulq_f64(va, vld1q_f64(x + i)));
        y1 = vaddq_f64(y1, vmulq_f64(va, vld1q_f64(x + i + 2)));
        vst1q_f64(y + i, y0);
        vst1q_f64(y + i + 2, y1);
    }
    for (std::size_t i = n4; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) {
    std::size_t n4 = n & ~std::size_t(3);
    float64x2_t acc01 = vdupq_n_f64(0.0);  // lanes 0,1
    float64x2_t acc23 = vdupq_n_f64(0.0);  // lanes 2,3
    for (std::size_t i = 0; i < n4; i += 4) {
        acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double s[4] = {vgetq_lane_f64(acc01, 0), vgetq_lane_f64(acc01, 1),
                   vgetq_lane_f64(acc23, 0), vgetq_lane_f64(acc23, 1)};
    for (std::size_t i = n4; i < n; ++i) s[i - n4] += x[i] * y[i];
    return (s[0] + s[2]) + (s[1] + s[3]);
}

void matmul_neon(const double* A, const double* B, double* C,
                 std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_neon(a[p], B + p * n, c, n);
    }
}

void matmul_nt_neon(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] = dot_neon(a, B + j * k, k);
    }
}


void matmul_acc_neon(const double* A, const double* B, double* C,
                  std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_neon(a[p], B + p * n, c, n);
    }
}

void matmul_nt_acc_neon(const double* A, const double* B, double* C,
                     std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += dot_neon(a, B + j * k, k);
    }
}

void matmul_tn_acc_neon(const double* A, const double* B, double* C,
                        std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < m; ++p) {
        const double* a = A + p * k;
        const double* b = B + p * n;
        for (std::size_t i = 0; i < k; ++i) axpy_neon(a[i], b, C + i * n, n);
    }
}

}  // namespace

const Kernels& neon_kernels() {
    static const Kernels k{axpy_neon, dot_neon, matmul_neon, matmul_acc_neon, matmul_nt_neon,
                           matmul_nt_acc_neon, matmul_tn_acc_neon, "neon"};
    return k;
}

}  // namespace surgkin

#endif
