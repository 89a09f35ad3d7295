#include "stdet/kernels.hpp"

#include <cmath>

// Reference kernels. Plain loops, no intrinsics; these define the semantics
// the SIMD variants are tested against.

namespace stdet::kern {
namespace {

inline const float* row_ptr(const float* m, int ld, int r) { return m + int64_t(r) * ld; }

void sgemm_scalar(bool trans_a, bool trans_b, int m, int n, int k,
                  const float* a, int lda, const float* b, int ldb,
                  float* c, int ldc, float beta) {
    for (int i = 0; i < m; ++i) {
        float* crow = c + int64_t(i) * ldc;
        if (beta == 0.0f) {
            for (int j = 0; j < n; ++j) crow[j] = 0.0f;
        }
        for (int p = 0; p < k; ++p) {
            const float av = trans_a ? row_ptr(a, lda, p)[i] : row_ptr(a, lda, i)[p];
            if (!trans_b) {
                const float* brow = row_ptr(b, ldb, p);
                for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
            } else {
                for (int j = 0; j < n; ++j) crow[j] += av * row_ptr(b, ldb, j)[p];
            }
        }
    }
}

void silu_scalar(const float* x, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_backward_scalar(const float* x, const float* dy, float* dx, int64_t n) {
    for (int64_t i = 0; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] += dy[i] * (s * (1.0f + x[i] * (1.0f - s)));
    }
}

void sigmoid_scalar(const float* x, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

void add_scalar(const float* a, const float* b, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void mul_scalar(const float* a, const float* b, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void axpy_scalar(float alpha, const float* x, float* y, int64_t n) {
    for (int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_scalar(const float* x, int64_t n) {
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void sgd_step_scalar(float* w, float* v, const float* g, int64_t n,
                     float lr, float momentum, float wd) {
    for (int64_t i = 0; i < n; ++i) {
        v[i] = momentum * v[i] + g[i] + wd * w[i];
        w[i] -= lr * v[i];
    }
}

void scale_channels_scalar(const float* x, const float* s, float* y,
                           int channels, int64_t hw) {
    for (int c = 0; c < channels; ++c) {
        const float sc = s[c];
        const float* src = x + c * hw;
        float* dst = y + c * hw;
        for (int64_t i = 0; i < hw; ++i) dst[i] = src[i] * sc;
    }
}

}  // namespace

const Kernels kernels_scalar = {
    "scalar",
    sgemm_scalar,
    silu_scalar,
    silu_backward_scalar,
    sigmoid_scalar,
    add_scalar,
    mul_scalar,
    axpy_scalar,
    sum_scalar,
    sgd_step_scalar,
    scale_channels_scalar,
};

}  // namespace stdet::kern
