#include <cstring>
#include <vector>

#include "doctest.h"
#include "surgkin/kernels.hpp"
#include "surgkin/rng.hpp"

using namespace surgkin;

namespace {

std::vector<double> randvec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("dot matches the fixed four-lane reduction order") {
    // reference: (s0+s2)+(s1+s3) with lane i accumulating elements i, i+4, ...
    Rng rng(11);
    for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 33u, 100u}) {
        auto x = randvec(rng, n);
        auto y = randvec(rng, n);
        double s[4] = {0, 0, 0, 0};
        for (std::size_t i = 0; i < n; ++i) s[i % 4] += x[i] * y[i];
        double want = (s[0] + s[2]) + (s[1] + s[3]);
        CHECK(scalar_kernels().dot(x.data(), y.data(), n) == want);
        CHECK(kernels().dot(x.data(), y.data(), n) == want);
    }
}

TEST_CASE("matmul against a hand-computed 2x3 * 3x2 product") {
    double A[6] = {1, 2, 3, 4, 5, 6};
    double B[6] = {7, 8, 9, 10, 11, 12};
    // C00 = 1*7+2*9+3*11 = 58, C01 = 1*8+2*10+3*12 = 64
    // C10 = 4*7+5*9+6*11 = 139, C11 = 4*8+5*10+6*12 = 154
    double C[4];
    kernels().matmul(A, B, C, 2, 3, 2);
    CHECK(C[0] == 58.0);
    CHECK(C[1] == 64.0);
    CHECK(C[2] == 139.0);
    CHECK(C[3] == 154.0);
}

TEST_CASE("active backend is bitwise-equal to the scalar reference") {
    const Kernels& ref = scalar_kernels();
    const Kernels& act = kernels();
    Rng rng(99);

    for (int rep = 0; rep < 6; ++rep) {
        std::size_t m = 1 + rng.index(9);
        std::size_t k = 1 + rng.index(17);
        std::size_t n = 1 + rng.index(13);
        auto A = randvec(rng, m * k);
        auto B = randvec(rng, k * n);
        auto Bt = randvec(rng, n * k);
        auto At = randvec(rng, m * k);  // used as {m,k} for tn
        auto Bn = randvec(rng, m * n);
        auto C0 = randvec(rng, m * n);

        std::vector<double> r(m * n), a(m * n);
        ref.matmul(A.data(), B.data(), r.data(), m, k, n);
        act.matmul(A.data(), B.data(), a.data(), m, k, n);
        CHECK(bitwise_equal(r, a));

        r = C0;
        a = C0;
        ref.matmul_acc(A.data(), B.data(), r.data(), m, k, n);
        act.matmul_acc(A.data(), B.data(), a.data(), m, k, n);
        CHECK(bitwise_equal(r, a));

        ref.matmul_nt(A.data(), Bt.data(), r.data(), m, k, n);
        act.matmul_nt(A.data(), Bt.data(), a.data(), m, k, n);
        CHECK(bitwise_equal(r, a));

        r = C0;
        a = C0;
        ref.matmul_nt_acc(A.data(), Bt.data(), r.data(), m, k, n);
        act.matmul_nt_acc(A.data(), Bt.data(), a.data(), m, k, n);
        CHECK(bitwise_equal(r, a));

        std::vector<double> rt(k * n, 0.5), at(k * n, 0.5);
        ref.matmul_tn_acc(At.data(), Bn.data(), rt.data(), m, k, n);
        act.matmul_tn_acc(At.data(), Bn.data(), at.data(), m, k, n);
        CHECK(bitwise_equal(rt, at));

        auto x = randvec(rng, k);
        auto y1 = randvec(rng, k);
        auto y2 = y1;
        ref.axpy(1.7, x.data(), y1.data(), k);
        act.axpy(1.7, x.data(), y2.data(), k);
        CHECK(bitwise_equal(y1, y2));

        CHECK(ref.dot(A.data(), A.data(), m * k) ==
              act.dot(A.data(), A.data(), m * k));
    }
}

TEST_CASE("axpy accumulates in source order") {
    double x[3] = {1.0, 2.0, 3.0};
    double y[3] = {10.0, 20.0, 30.0};
    kernels().axpy(2.0, x, y, 3);
    CHECK(y[0] == 12.0);
    CHECK(y[1] == 24.0);
    CHECK(y[2] == 36.0);
}
