#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "unitok/kernels.h"
#include "unitok/rng.h"

using namespace unitok;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<float> v(n);
    for (auto& x : v) x = float(rng.uniform(lo, hi));
    return v;
}

void expect_close(const std::vector<float>& a, const std::vector<float>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({1.0, std::fabs(double(a[i])), std::fabs(double(b[i]))});
        REQUIRE(std::fabs(double(a[i]) - double(b[i])) / scale < tol);
    }
}

}  // namespace

TEST_CASE("lane detection reports a valid lane") {
    const char* name = kern::ops().name;
    REQUIRE((std::string(name) == "scalar" || std::string(name) == "avx2"));
}

TEST_CASE("elementwise kernels: scalar vs simd equivalence") {
    const kern::Ops* simd = kern::avx2_ops();
    if (!simd) return;  // scalar-only build
    const kern::Ops& ref = kern::scalar_ops();
    Rng rng(7, "kern-elem");
    for (std::size_t n : {1u, 7u, 8u, 9u, 63u, 64u, 257u, 1024u}) {
        auto a = random_vec(rng, n), b = random_vec(rng, n);
        std::vector<float> y1(n), y2(n);

        ref.vadd(n, a.data(), b.data(), y1.data());
        simd->vadd(n, a.data(), b.data(), y2.data());
        expect_close(y1, y2, 0.0 + 1e-12);

        ref.vsub(n, a.data(), b.data(), y1.data());
        simd->vsub(n, a.data(), b.data(), y2.data());
        expect_close(y1, y2, 1e-12);

        ref.vmul(n, a.data(), b.data(), y1.data());
        simd->vmul(n, a.data(), b.data(), y2.data());
        expect_close(y1, y2, 1e-12);

        y1 = b; y2 = b;
        ref.axpy(n, 0.37f, a.data(), y1.data());
        simd->axpy(n, 0.37f, a.data(), y2.data());
        expect_close(y1, y2, 1e-6);

        y1 = a; y2 = a;
        ref.vscale(n, -1.7f, y1.data());
        simd->vscale(n, -1.7f, y2.data());
        expect_close(y1, y2, 1e-12);

        ref.leaky_relu(n, 0.1f, a.data(), y1.data());
        simd->leaky_relu(n, 0.1f, a.data(), y2.data());
        expect_close(y1, y2, 1e-12);

        REQUIRE(std::fabs(ref.dot(n, a.data(), b.data()) - simd->dot(n, a.data(), b.data())) < 1e-4);
        REQUIRE(std::fabs(ref.vsum(n, a.data()) - simd->vsum(n, a.data())) < 1e-4);
        REQUIRE(std::fabs(ref.sum_abs_diff(n, a.data(), b.data()) -
                          simd->sum_abs_diff(n, a.data(), b.data())) < 1e-4);
        REQUIRE(std::fabs(ref.sum_sq_diff(n, a.data(), b.data()) -
                          simd->sum_sq_diff(n, a.data(), b.data())) < 1e-4);
    }
}

TEST_CASE("gemm kernels: scalar vs simd equivalence across shapes") {
    const kern::Ops* simd = kern::avx2_ops();
    if (!simd) return;
    const kern::Ops& ref = kern::scalar_ops();
    Rng rng(11, "kern-gemm");
    // deliberately awkward shapes around the 4x16 blocking
    const int shapes[][3] = {{1, 1, 1},   {2, 3, 4},   {4, 16, 8},  {5, 17, 9},
                             {7, 33, 21}, {16, 64, 48}, {3, 130, 7}, {12, 100, 100}};
    for (auto& s : shapes) {
        const int m = s[0], n = s[1], k = s[2];
        auto A = random_vec(rng, std::size_t(m) * k);
        auto B = random_vec(rng, std::size_t(k) * n);
        auto Bt = random_vec(rng, std::size_t(n) * k);
        auto At = random_vec(rng, std::size_t(k) * m);
        auto C0 = random_vec(rng, std::size_t(m) * n);

        for (float beta : {0.0f, 1.0f, 0.5f}) {
            auto c1 = C0, c2 = C0;
            ref.gemm_nn(m, n, k, 1.3f, A.data(), k, B.data(), n, beta, c1.data(), n);
            simd->gemm_nn(m, n, k, 1.3f, A.data(), k, B.data(), n, beta, c2.data(), n);
            expect_close(c1, c2, 2e-5);

            c1 = C0; c2 = C0;
            ref.gemm_nt(m, n, k, 0.9f, A.data(), k, Bt.data(), k, beta, c1.data(), n);
            simd->gemm_nt(m, n, k, 0.9f, A.data(), k, Bt.data(), k, beta, c2.data(), n);
            expect_close(c1, c2, 2e-5);

            c1 = C0; c2 = C0;
            ref.gemm_tn(m, n, k, 1.1f, At.data(), m, B.data(), n, beta, c1.data(), n);
            simd->gemm_tn(m, n, k, 1.1f, At.data(), m, B.data(), n, beta, c2.data(), n);
            expect_close(c1, c2, 2e-5);
        }
    }
}

TEST_CASE("gemm against hand-computed 2x2") {
    // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
    const float A[] = {1, 2, 3, 4};
    const float B[] = {5, 6, 7, 8};
    float C[4] = {0, 0, 0, 0};
    kern::ops().gemm_nn(2, 2, 2, 1.0f, A, 2, B, 2, 0.0f, C, 2);
    REQUIRE(C[0] == doctest::Approx(19));
    REQUIRE(C[1] == doctest::Approx(22));
    REQUIRE(C[2] == doctest::Approx(43));
    REQUIRE(C[3] == doctest::Approx(50));
}

TEST_CASE("force_lane honors availability") {
    REQUIRE(kern::force_lane("scalar"));
    REQUIRE(std::string(kern::ops().name) == "scalar");
    if (kern::avx2_ops()) {
        REQUIRE(kern::force_lane("avx2"));
        REQUIRE(std::string(kern::ops().name) == "avx2");
    }
    REQUIRE(!kern::force_lane("bogus"));
}
