#pragma once

// CPU compute kernels: scalar reference implementations plus SIMD (AVX2/FMA)
// variants selected at runtime. Every SIMD kernel has a scalar twin with
// identical semantics; equivalence is enforced by tests/test_kernels.cpp.

#include <cstdint>
#include <string>
#include <vector>

namespace stdet::kern {

struct CpuCaps {
    bool avx2 = false;
    bool fma = false;
    bool avx512f = false;
    std::string to_string() const;
};

// cpuid-based detection, cached after first call.
const CpuCaps& caps();

struct Kernels {
    const char* name;

    // C[M,N] = alpha * op(A) * op(B) + beta * C, all row-major.
    // trans_a: op(A) = A^T where A is stored K x M (lda = stride of A rows).
    // trans_b: op(B) = B^T where B is stored N x K.
    void (*sgemm)(bool trans_a, bool trans_b, int m, int n, int k,
                  const float* a, int lda, const float* b, int ldb,
                  float* c, int ldc, float beta);

    // y = x * sigmoid(x)
    void (*silu)(const float* x, float* y, int64_t n);
    // dx += dy * d/dx[x*sigmoid(x)]
    void (*silu_backward)(const float* x, const float* dy, float* dx, int64_t n);
    void (*sigmoid)(const float* x, float* y, int64_t n);

    void (*add)(const float* a, const float* b, float* y, int64_t n);
    void (*mul)(const float* a, const float* b, float* y, int64_t n);
    // y += alpha * x
    void (*axpy)(float alpha, const float* x, float* y, int64_t n);
    double (*sum)(const float* x, int64_t n);

    // Fused SGD with momentum: v = momentum*v + g + wd*w; w -= lr*v.
    void (*sgd_step)(float* w, float* v, const float* g, int64_t n,
                     float lr, float momentum, float wd);

    // y[c*hw + i] = x[c*hw + i] * s[c]  (per-channel scale, one image)
    void (*scale_channels)(const float* x, const float* s, float* y,
                           int channels, int64_t hw);
};

// Active kernel table. Defaults to the widest supported SIMD variant;
// override with env STDET_KERNELS=scalar|avx2 or select().
const Kernels& active();
void select(const std::string& name);  // throws on unknown/unsupported
std::vector<const Kernels*> available();

extern const Kernels kernels_scalar;
#if defined(__x86_64__) || defined(_M_X64)
extern const Kernels kernels_avx2;
#endif

// ---- layout transforms (scalar; memory bound) ----

// Expand one image [c_in, h, w] into columns [c_in*kh*kw, out_h*out_w].
void im2col(const float* img, int c_in, int h, int w, int kh, int kw,
            int stride, int pad, float* col);
// Scatter-add columns back into an image gradient (inverse of im2col).
void col2im(const float* col, int c_in, int h, int w, int kh, int kw,
            int stride, int pad, float* img);

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

}  // namespace stdet::kern
