#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "surgkin/kernels.hpp"

// AVX2 variants. mul+add (no FMA) so rounding matches the scalar
// reference exactly; the dot reduction is (s0+s2)+(s1+s3) in both.

namespace surgkin {
namespace {

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    std::size_t n4 = n & ~std::size_t(3);
    __m256d va = _mm256_set1_pd(a);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (std::size_t i = n4; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    std::size_t n4 = n & ~std::size_t(3);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d vy = _mm256_loadu_pd(y + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(vx, vy));
    }
    alignas(32) double s[4];
    _mm256_store_pd(s, acc);
    for (std::size_t i = n4; i < n; ++i) s[i - n4] += x[i] * y[i];
    return (s[0] + s[2]) + (s[1] + s[3]);
}

void matmul_avx2(const double* A, const double* B, double* C,
                 std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m * n; ++i) C[i] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_avx2(a[p], B + p * n, c, n);
    }
}

void matmul_nt_avx2(const double* A, const double* B, double* C,
                    std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] = dot_avx2(a, B + j * k, k);
    }
}


void matmul_acc_avx2(const double* A, const double* B, double* C,
                  std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t p = 0; p < k; ++p) axpy_avx2(a[p], B + p * n, c, n);
    }
}

void matmul_nt_acc_avx2(const double* A, const double* B, double* C,
                     std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += dot_avx2(a, B + j * k, k);
    }
}

void matmul_tn_acc_avx2(const double* A, const double* B, double* C,
                        std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < m; ++p) {
        const double* a = A + p * k;
        const double* b = B + p * n;
        for (std::size_t i = 0; i < k; ++i) axpy_avx2(a[i], b, C + i * n, n);
    }
}

}  // namespace

const Kernels& avx2_kernels() {
    static const Kernels k{axpy_avx2, dot_avx2, matmul_avx2, matmul_acc_avx2, matmul_nt_avx2,
                           matmul_nt_acc_avx2, matmul_tn_acc_avx2, "avx2"};
    return k;
}

}  // namespace surgkin

#endif
