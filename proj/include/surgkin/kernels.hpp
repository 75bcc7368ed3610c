#pragma once

#include <cstddef>
#include <string>

namespace surgkin {

// Hot inner loops of the numeric core. Every backend must produce
// bitwise-identical results: the summation order is fixed (axpy kernels
// accumulate in source order, dot kernels use four partial sums combined
// as (s0+s2)+(s1+s3), matching the AVX2 lane reduction).
struct Kernels {
    // y[0..n) += a * x[0..n)
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // four-lane dot product
    double (*dot)(const double* x, const double* y, std::size_t n);
    // C[m x n] = A[m x k] * B[k x n], row-major, C overwritten
    void (*matmul)(const double* A, const double* B, double* C,
                   std::size_t m, std::size_t k, std::size_t n);
    // C[m x n] += A[m x k] * B[k x n]
    void (*matmul_acc)(const double* A, const double* B, double* C,
                       std::size_t m, std::size_t k, std::size_t n);
    // C[m x n] = A[m x k] * B[n x k]^T
    void (*matmul_nt)(const double* A, const double* B, double* C,
                      std::size_t m, std::size_t k, std::size_t n);
    // C[m x n] += A[m x k] * B[n x k]^T
    void (*matmul_nt_acc)(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n);
    // C[k x n] += A[m x k]^T * B[m x n]   (accumulating; caller zeroes C)
    void (*matmul_tn_acc)(const double* A, const double* B, double* C,
                          std::size_t m, std::size_t k, std::size_t n);
    const char* name;
};

const Kernels& scalar_kernels();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif
#if defined(__aarch64__)
const Kernels& neon_kernels();
#endif

// Backend chosen at first use: AVX2/NEON when the CPU supports it, scalar
// otherwise. SURGKIN_KERNELS=scalar forces the reference path.
const Kernels& kernels();

}  // namespace surgkin
