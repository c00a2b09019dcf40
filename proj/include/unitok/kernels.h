#pragma once

#include <cstddef>

namespace unitok::kern {

// Hot inner loops of the tensor stack. Two lanes: a scalar reference
// implementation and an AVX2+FMA variant, selected once at startup from
// cpuid. The lanes are equivalence-tested against each other; everything
// above this layer is lane-agnostic.
//
// All matrices are row-major. gemm_* follow C = alpha * op(A) * op(B) + beta * C.
struct Ops {
    const char* name;

    void (*vadd)(std::size_t n, const float* a, const float* b, float* y);        // y = a + b
    void (*vsub)(std::size_t n, const float* a, const float* b, float* y);        // y = a - b
    void (*vmul)(std::size_t n, const float* a, const float* b, float* y);        // y = a * b
    void (*axpy)(std::size_t n, float alpha, const float* x, float* y);           // y += alpha * x
    void (*vscale)(std::size_t n, float alpha, float* y);                         // y *= alpha
    float (*dot)(std::size_t n, const float* a, const float* b);
    float (*vsum)(std::size_t n, const float* x);
    float (*sum_abs_diff)(std::size_t n, const float* a, const float* b);         // sum |a-b|
    float (*sum_sq_diff)(std::size_t n, const float* a, const float* b);          // sum (a-b)^2
    void (*leaky_relu)(std::size_t n, float slope, const float* x, float* y);
    // C(m x n) = alpha * A(m x k) * B(k x n) + beta * C
    void (*gemm_nn)(int m, int n, int k, float alpha, const float* A, int lda,
                    const float* B, int ldb, float beta, float* C, int ldc);
    // C(m x n) = alpha * A(m x k) * B(n x k)^T + beta * C
    void (*gemm_nt)(int m, int n, int k, float alpha, const float* A, int lda,
                    const float* B, int ldb, float beta, float* C, int ldc);
    // C(m x n) = alpha * A(k x m)^T * B(k x n) + beta * C
    void (*gemm_tn)(int m, int n, int k, float alpha, const float* A, int lda,
                    const float* B, int ldb, float beta, float* C, int ldc);
};

// Active lane (honors the UNITOK_KERNELS env var: "scalar" or "avx2").
const Ops& ops();

const Ops& scalar_ops();
// Null when the binary was built without AVX2 support or the CPU lacks it.
const Ops* avx2_ops();

// Test hook; returns false if the lane is unavailable.
bool force_lane(const char* name);

}  // namespace unitok::kern
