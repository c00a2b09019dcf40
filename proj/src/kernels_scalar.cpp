#include <cmath>
#include <cstddef>

#include "unitok/kernels.h"

// Reference lane. Plain loops, no reassociation tricks: this is the
// semantics the AVX2 lane is tested against.

namespace unitok::kern {
namespace {

void s_vadd(std::size_t n, const float* a, const float* b, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void s_vsub(std::size_t n, const float* a, const float* b, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void s_vmul(std::size_t n, const float* a, const float* b, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void s_axpy(std::size_t n, float alpha, const float* x, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_vscale(std::size_t n, float alpha, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= alpha;
}

float s_dot(std::size_t n, const float* a, const float* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += double(a[i]) * double(b[i]);
    return float(acc);
}

float s_vsum(std::size_t n, const float* x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return float(acc);
}

float s_sum_abs_diff(std::size_t n, const float* a, const float* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::fabs(double(a[i]) - double(b[i]));
    return float(acc);
}

float s_sum_sq_diff(std::size_t n, const float* a, const float* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return float(acc);
}

void s_leaky_relu(std::size_t n, float slope, const float* x, float* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void s_gemm_nn(int m, int n, int k, float alpha, const float* A, int lda,
               const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        float* c = C + std::size_t(i) * ldc;
        if (beta == 0.0f) {
            for (int j = 0; j < n; ++j) c[j] = 0.0f;
        } else if (beta != 1.0f) {
            for (int j = 0; j < n; ++j) c[j] *= beta;
        }
        const float* a = A + std::size_t(i) * lda;
        for (int p = 0; p < k; ++p) {
            const float av = alpha * a[p];
            const float* b = B + std::size_t(p) * ldb;
            for (int j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

void s_gemm_nt(int m, int n, int k, float alpha, const float* A, int lda,
               const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        const float* a = A + std::size_t(i) * lda;
        float* c = C + std::size_t(i) * ldc;
        for (int j = 0; j < n; ++j) {
            const float* b = B + std::size_t(j) * ldb;
            float acc = 0.0f;
            for (int p = 0; p < k; ++p) acc += a[p] * b[p];
            c[j] = alpha * acc + (beta == 0.0f ? 0.0f : beta * c[j]);
        }
    }
}

void s_gemm_tn(int m, int n, int k, float alpha, const float* A, int lda,
               const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        float* c = C + std::size_t(i) * ldc;
        if (beta == 0.0f) {
            for (int j = 0; j < n; ++j) c[j] = 0.0f;
        } else if (beta != 1.0f) {
            for (int j = 0; j < n; ++j) c[j] *= beta;
        }
    }
    for (int p = 0; p < k; ++p) {
        const float* arow = A + std::size_t(p) * lda;
        const float* brow = B + std::size_t(p) * ldb;
        for (int i = 0; i < m; ++i) {
            const float av = alpha * arow[i];
            float* c = C + std::size_t(i) * ldc;
            for (int j = 0; j < n; ++j) c[j] += av * brow[j];
        }
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops table = {
        "scalar", s_vadd,         s_vsub,        s_vmul,       s_axpy,
        s_vscale, s_dot,          s_vsum,        s_sum_abs_diff, s_sum_sq_diff,
        s_leaky_relu, s_gemm_nn,  s_gemm_nt,     s_gemm_tn,
    };
    return table;
}

}  // namespace unitok::kern
