#include <cstddef>

#include "unitok/kernels.h"

#ifdef UNITOK_BUILD_AVX2

#include <immintrin.h>

// AVX2+FMA lane. GEMMs use small register blocks (4x16 for NN/TN, 4x2
// accumulators for NT); tails fall back to scalar loops. Results may differ
// from the reference lane by FMA/reassociation rounding only.

namespace unitok::kern {
namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
    lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
    return _mm_cvtss_f32(lo);
}

void a_vadd(std::size_t n, const float* a, const float* b, float* y) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] + b[i];
}

void a_vsub(std::size_t n, const float* a, const float* b, float* y) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] - b[i];
}

void a_vmul(std::size_t n, const float* a, const float* b, float* y) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] * b[i];
}

void a_axpy(std::size_t n, float alpha, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void a_vscale(std::size_t n, float alpha, float* y) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_mul_ps(va, _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] *= alpha;
}

float a_dot(std::size_t n, const float* a, const float* b) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float r = hsum256(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

float a_vsum(std::size_t n, const float* x) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float r = hsum256(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

float a_sum_abs_diff(std::size_t n, const float* a, const float* b) {
    const __m256 signmask = _mm256_set1_ps(-0.0f);
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, _mm256_andnot_ps(signmask, d));
    }
    float r = hsum256(acc);
    for (; i < n; ++i) {
        const float d = a[i] - b[i];
        r += d < 0.0f ? -d : d;
    }
    return r;
}

float a_sum_sq_diff(std::size_t n, const float* a, const float* b) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_fmadd_ps(d, d, acc);
    }
    float r = hsum256(acc);
    for (; i < n; ++i) {
        const float d = a[i] - b[i];
        r += d * d;
    }
    return r;
}

void a_leaky_relu(std::size_t n, float slope, const float* x, float* y) {
    const __m256 vs = _mm256_set1_ps(slope);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 neg = _mm256_mul_ps(v, vs);
        __m256 mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(y + i, _mm256_blendv_ps(neg, v, mask));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

// 4x16 FMA block over the n dimension.
void a_gemm_nn(int m, int n, int k, float alpha, const float* A, int lda,
               const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        float* c = C + std::size_t(i) * ldc;
        if (beta == 0.0f) {
            for (int j = 0; j < n; ++j) c[j] = 0.0f;
        } else if (beta != 1.0f) {
            for (int j = 0; j < n; ++j) c[j] *= beta;
        }
    }
    int i = 0;
    for (; i + 4 <= m; i += 4) {
        const float* a0 = A + std::size_t(i) * lda;
        const float* a1 = a0 + lda;
        const float* a2 = a1 + lda;
        const float* a3 = a2 + lda;
        float* c0 = C + std::size_t(i) * ldc;
        float* c1 = c0 + ldc;
        float* c2 = c1 + ldc;
        float* c3 = c2 + ldc;
        int j = 0;
        for (; j + 16 <= n; j += 16) {
            __m256 acc00 = _mm256_loadu_ps(c0 + j), acc01 = _mm256_loadu_ps(c0 + j + 8);
            __m256 acc10 = _mm256_loadu_ps(c1 + j), acc11 = _mm256_loadu_ps(c1 + j + 8);
            __m256 acc20 = _mm256_loadu_ps(c2 + j), acc21 = _mm256_loadu_ps(c2 + j + 8);
            __m256 acc30 = _mm256_loadu_ps(c3 + j), acc31 = _mm256_loadu_ps(c3 + j + 8);
            for (int p = 0; p < k; ++p) {
                const float* b = B + std::size_t(p) * ldb + j;
                const __m256 b0 = _mm256_loadu_ps(b);
                const __m256 b1 = _mm256_loadu_ps(b + 8);
                __m256 av;
                av = _mm256_set1_ps(alpha * a0[p]);
                acc00 = _mm256_fmadd_ps(av, b0, acc00);
                acc01 = _mm256_fmadd_ps(av, b1, acc01);
                av = _mm256_set1_ps(alpha * a1[p]);
                acc10 = _mm256_fmadd_ps(av, b0, acc10);
                acc11 = _mm256_fmadd_ps(av, b1, acc11);
                av = _mm256_set1_ps(alpha * a2[p]);
                acc20 = _mm256_fmadd_ps(av, b0, acc20);
                acc21 = _mm256_fmadd_ps(av, b1, acc21);
                av = _mm256_set1_ps(alpha * a3[p]);
                acc30 = _mm256_fmadd_ps(av, b0, acc30);
                acc31 = _mm256_fmadd_ps(av, b1, acc31);
            }
            _mm256_storeu_ps(c0 + j, acc00);
            _mm256_storeu_ps(c0 + j + 8, acc01);
            _mm256_storeu_ps(c1 + j, acc10);
            _mm256_storeu_ps(c1 + j + 8, acc11);
            _mm256_storeu_ps(c2 + j, acc20);
            _mm256_storeu_ps(c2 + j + 8, acc21);
            _mm256_storeu_ps(c3 + j, acc30);
            _mm256_storeu_ps(c3 + j + 8, acc31);
        }
        for (; j < n; ++j) {
            float s0 = 0, s1 = 0, s2 = 0, s3 = 0;
            for (int p = 0; p < k; ++p) {
                const float b = B[std::size_t(p) * ldb + j];
                s0 += a0[p] * b;
                s1 += a1[p] * b;
                s2 += a2[p] * b;
                s3 += a3[p] * b;
            }
            c0[j] += alpha * s0;
            c1[j] += alpha * s1;
            c2[j] += alpha * s2;
            c3[j] += alpha * s3;
        }
    }
    for (; i < m; ++i) {
        const float* a = A + std::size_t(i) * lda;
        float* c = C + std::size_t(i) * ldc;
        int j = 0;
        for (; j + 8 <= n; j += 8) {
            __m256 acc = _mm256_loadu_ps(c + j);
            for (int p = 0; p < k; ++p)
                acc = _mm256_fmadd_ps(_mm256_set1_ps(alpha * a[p]),
                                      _mm256_loadu_ps(B + std::size_t(p) * ldb + j), acc);
            _mm256_storeu_ps(c + j, acc);
        }
        for (; j < n; ++j) {
            float s = 0;
            for (int p = 0; p < k; ++p) s += a[p] * B[std::size_t(p) * ldb + j];
            c[j] += alpha * s;
        }
    }
}

void a_gemm_nt(int m, int n, int k, float alpha, const float* A, int lda,
               const float* B, int ldb, float beta, float* C, int ldc) {
    for (int i = 0; i < m; ++i) {
        const float* a = A + std::size_t(i) * lda;
        float* c = C + std::size_t(i) * ldc;
        int j = 0;
        for (; j + 4 <= n; j += 4) {
            const float* b0 = B + std::size_t(j) * ldb;
            const float* b1 = b0 + ldb;
            const float* b2 = b1 + ldb;
            const float* b3 = b2 + ldb;
            __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
            __m256 s2 = _mm256_setzero_ps(), s3 = _mm256_setzero_ps();
            int p = 0;
            for (; p + 8 <= k; p += 8) {
                const __m256 av = _mm256_loadu_ps(a + p);
                s0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0 + p), s0);
                s1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1 + p), s1);
                s2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2 + p), s2);
                s3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3 + p), s3);
            }
            float r0 = hsum256(s0), r1 = hsum256(s1), r2 = hsum256(s2), r3 = hsum256(s3);
            for (; p < k; ++p) {
                r0 += a[p] * b0[p];
                r1 += a[p] * b1[p];
                r2 += a[p] * b2[p];
                r3 += a[p] * b3[p];
            }
            const float base0 = beta == 0.0f ? 0.0f : beta * c[j + 0];
            const float base1 = beta == 0.0f ? 0.0f : beta * c[j + 1];
            const float base2 = beta == 0.0f ? 0.0f : beta * c[j + 2];
            const float base3 = beta == 0.0f ? 0.0f : beta * c[j + 3];
            c[j + 0] = base0 + alpha * r0;
            c[j + 1] = base1 + alpha * r1;
            c[j + 2] = base2 + alpha * r2;
            c[j + 3] = base3 + alpha * r3;
        }
        for (; j < n; ++j) {
            const float* b = B + std::size_t(j) * ldb;
            float r = a_dot(std::size_t(k), a, b);
            c[j] = (beta == 0.0f ? 0.0f : beta * c[j]) + alpha * r;
        }
    }
}

// Rank-1 updates: for each row p of A/B, C(i,:) += alpha*A(p,i)*B(p,:).
void a_gemm_tn(int m, int n, int k, float alpha, const float* A, int lda,
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
            if (av == 0.0f) continue;
            a_axpy(std::size_t(n), av, brow, C + std::size_t(i) * ldc);
        }
    }
}

}  // namespace

const Ops* avx2_ops() {
    static const Ops table = {
        "avx2",   a_vadd,         a_vsub,        a_vmul,       a_axpy,
        a_vscale, a_dot,          a_vsum,        a_sum_abs_diff, a_sum_sq_diff,
        a_leaky_relu, a_gemm_nn,  a_gemm_nt,     a_gemm_tn,
    };
    return &table;
}

}  // namespace unitok::kern

#else

namespace unitok::kern {
const Ops* avx2_ops() { return nullptr; }
}  // namespace unitok::kern

#endif
