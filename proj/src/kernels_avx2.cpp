#if defined(__x86_64__) || defined(_M_X64)

#include "stdet/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

// AVX2+FMA kernels. GEMM follows the usual pack-and-microkernel scheme with a
// 6x16 FMA microkernel; every output element is accumulated in a fixed k order
// so results are deterministic run to run.

namespace stdet::kern {
namespace {

constexpr int MR = 6;
constexpr int NR = 16;
constexpr int KC = 256;
constexpr int MC = 96;   // multiple of MR
constexpr int NC = 2048; // multiple of NR

// ---- vector exp, cephes-style polynomial ----
inline __m256 exp256(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647949f);
    const __m256 lo = _mm256_set1_ps(-88.3762626647949f);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    const __m256 c1 = _mm256_set1_ps(0.693359375f);
    const __m256 c2 = _mm256_set1_ps(-2.12194440e-4f);
    const __m256 one = _mm256_set1_ps(1.0f);

    x = _mm256_min_ps(x, hi);
    x = _mm256_max_ps(x, lo);

    __m256 fx = _mm256_fmadd_ps(x, log2e, _mm256_set1_ps(0.5f));
    fx = _mm256_floor_ps(fx);
    x = _mm256_fnmadd_ps(fx, c1, x);
    x = _mm256_fnmadd_ps(fx, c2, x);

    __m256 y = _mm256_set1_ps(1.9875691500e-4f);
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.3981999507e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(8.3334519073e-3f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(4.1665795894e-2f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(1.6666665459e-1f));
    y = _mm256_fmadd_ps(y, x, _mm256_set1_ps(5.0000001201e-1f));
    const __m256 z = _mm256_mul_ps(x, x);
    y = _mm256_fmadd_ps(y, z, _mm256_add_ps(x, one));

    const __m256i emm0 = _mm256_slli_epi32(
        _mm256_add_epi32(_mm256_cvttps_epi32(fx), _mm256_set1_epi32(0x7f)), 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(emm0));
}

inline __m256 sigmoid256(__m256 x) {
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 e = exp256(_mm256_sub_ps(_mm256_setzero_ps(), x));
    return _mm256_div_ps(one, _mm256_add_ps(one, e));
}

// ---- GEMM ----

inline float a_elem(const float* a, int lda, bool trans, int i, int p) {
    return trans ? a[int64_t(p) * lda + i] : a[int64_t(i) * lda + p];
}
inline float b_elem(const float* b, int ldb, bool trans, int p, int j) {
    return trans ? b[int64_t(j) * ldb + p] : b[int64_t(p) * ldb + j];
}

// Pack an mc x kc block of A into MR-row panels, k-major within each panel.
void pack_a(const float* a, int lda, bool trans, int i0, int p0, int mc, int kc,
            float* dst) {
    for (int ir = 0; ir < mc; ir += MR) {
        const int rows = std::min(MR, mc - ir);
        if (!trans) {
            for (int p = 0; p < kc; ++p) {
                for (int r = 0; r < rows; ++r)
                    dst[r] = a[int64_t(i0 + ir + r) * lda + (p0 + p)];
                for (int r = rows; r < MR; ++r) dst[r] = 0.0f;
                dst += MR;
            }
        } else {
            for (int p = 0; p < kc; ++p) {
                const float* arow = a + int64_t(p0 + p) * lda + i0 + ir;
                for (int r = 0; r < rows; ++r) dst[r] = arow[r];
                for (int r = rows; r < MR; ++r) dst[r] = 0.0f;
                dst += MR;
            }
        }
    }
}

// Pack a kc x nc block of B into NR-column panels, k-major within each panel.
void pack_b(const float* b, int ldb, bool trans, int p0, int j0, int kc, int nc,
            float* dst) {
    for (int jr = 0; jr < nc; jr += NR) {
        const int cols = std::min(NR, nc - jr);
        if (!trans && cols == NR) {
            for (int p = 0; p < kc; ++p) {
                std::memcpy(dst, b + int64_t(p0 + p) * ldb + j0 + jr, NR * sizeof(float));
                dst += NR;
            }
        } else {
            for (int p = 0; p < kc; ++p) {
                for (int j = 0; j < cols; ++j)
                    dst[j] = b_elem(b, ldb, trans, p0 + p, j0 + jr + j);
                for (int j = cols; j < NR; ++j) dst[j] = 0.0f;
                dst += NR;
            }
        }
    }
}

template <int ROWS>
inline void micro_kernel(int kc, const float* ap, const float* bp, float* acc_out) {
    __m256 acc[ROWS][2];
    for (int r = 0; r < ROWS; ++r) {
        acc[r][0] = _mm256_setzero_ps();
        acc[r][1] = _mm256_setzero_ps();
    }
    for (int p = 0; p < kc; ++p) {
        const __m256 b0 = _mm256_loadu_ps(bp);
        const __m256 b1 = _mm256_loadu_ps(bp + 8);
        bp += NR;
        for (int r = 0; r < ROWS; ++r) {
            const __m256 av = _mm256_broadcast_ss(ap + r);
            acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
            acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
        }
        ap += MR;
    }
    for (int r = 0; r < ROWS; ++r) {
        _mm256_storeu_ps(acc_out + r * NR, acc[r][0]);
        _mm256_storeu_ps(acc_out + r * NR + 8, acc[r][1]);
    }
}

using MicroFn = void (*)(int, const float*, const float*, float*);
constexpr MicroFn micro_table[MR] = {
    micro_kernel<1>, micro_kernel<2>, micro_kernel<3>,
    micro_kernel<4>, micro_kernel<5>, micro_kernel<6>,
};

struct Scratch {
    std::vector<float> a, b;
};
Scratch& scratch() {
    thread_local Scratch s;
    return s;
}

void sgemm_avx2(bool trans_a, bool trans_b, int m, int n, int k,
                const float* a, int lda, const float* b, int ldb,
                float* c, int ldc, float beta) {
    if (m <= 0 || n <= 0) return;
    if (k <= 0) {
        if (beta == 0.0f)
            for (int i = 0; i < m; ++i)
                std::memset(c + int64_t(i) * ldc, 0, size_t(n) * sizeof(float));
        return;
    }
    Scratch& s = scratch();
    s.a.resize(size_t(MC + MR) * KC);
    s.b.resize(size_t(KC) * (NC + NR));

    alignas(32) float tile[MR * NR];

    for (int jc = 0; jc < n; jc += NC) {
        const int nc = std::min(NC, n - jc);
        const int nc_pad = (nc + NR - 1) / NR * NR;
        for (int pc = 0; pc < k; pc += KC) {
            const int kc = std::min(KC, k - pc);
            const bool first_k = (pc == 0);
            pack_b(b, ldb, trans_b, pc, jc, kc, nc, s.b.data());
            for (int ic = 0; ic < m; ic += MC) {
                const int mc = std::min(MC, m - ic);
                pack_a(a, lda, trans_a, ic, pc, mc, kc, s.a.data());
                for (int jr = 0; jr < nc; jr += NR) {
                    const int cols = std::min(NR, nc - jr);
                    const float* bp = s.b.data() + int64_t(jr / NR) * kc * NR;
                    (void)nc_pad;
                    for (int ir = 0; ir < mc; ir += MR) {
                        const int rows = std::min(MR, mc - ir);
                        const float* ap = s.a.data() + int64_t(ir / MR) * kc * MR;
                        micro_table[rows - 1](kc, ap, bp, tile);
                        for (int r = 0; r < rows; ++r) {
                            float* crow = c + int64_t(ic + ir + r) * ldc + jc + jr;
                            const float* trow = tile + r * NR;
                            if (first_k && beta == 0.0f) {
                                for (int j = 0; j < cols; ++j) crow[j] = trow[j];
                            } else {
                                for (int j = 0; j < cols; ++j) crow[j] += trow[j];
                            }
                        }
                    }
                }
            }
        }
    }
}

// ---- elementwise ----

void silu_avx2(const float* x, float* y, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_mul_ps(v, sigmoid256(v)));
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        y[i] = x[i] * s;
    }
}

void silu_backward_avx2(const float* x, const float* dy, float* dx, int64_t n) {
    const __m256 one = _mm256_set1_ps(1.0f);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 s = sigmoid256(v);
        // s * (1 + x*(1-s))
        const __m256 d = _mm256_mul_ps(s, _mm256_fmadd_ps(v, _mm256_sub_ps(one, s), one));
        const __m256 g = _mm256_fmadd_ps(_mm256_loadu_ps(dy + i), d, _mm256_loadu_ps(dx + i));
        _mm256_storeu_ps(dx + i, g);
    }
    for (; i < n; ++i) {
        const float s = 1.0f / (1.0f + std::exp(-x[i]));
        dx[i] += dy[i] * (s * (1.0f + x[i] * (1.0f - s)));
    }
}

void sigmoid_avx2(const float* x, float* y, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, sigmoid256(_mm256_loadu_ps(x + i)));
    for (; i < n; ++i) y[i] = 1.0f / (1.0f + std::exp(-x[i]));
}

void add_avx2(const float* a, const float* b, float* y, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] + b[i];
}

void mul_avx2(const float* a, const float* b, float* y, int64_t n) {
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) y[i] = a[i] * b[i];
}

void axpy_avx2(float alpha, const float* x, float* y, int64_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_avx2(const float* x, int64_t n) {
    // Fixed-shape 4-lane double accumulation; deterministic.
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(v)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1)));
    }
    alignas(32) double tmp[4];
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    _mm256_store_pd(tmp, acc);
    double r = (tmp[0] + tmp[1]) + (tmp[2] + tmp[3]);
    for (; i < n; ++i) r += x[i];
    return r;
}

void sgd_step_avx2(float* w, float* v, const float* g, int64_t n,
                   float lr, float momentum, float wd) {
    const __m256 mو = _mm256_set1_ps(momentum);
    const __m256 wdv = _mm256_set1_ps(wd);
    const __m256 lrv = _mm256_set1_ps(lr);
    int64_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 wv = _mm256_loadu_ps(w + i);
        __m256 vv = _mm256_loadu_ps(v + i);
        const __m256 gv = _mm256_fmadd_ps(wdv, wv, _mm256_loadu_ps(g + i));
        vv = _mm256_fmadd_ps(mو, vv, gv);
        _mm256_storeu_ps(v + i, vv);
        _mm256_storeu_ps(w + i, _mm256_fnmadd_ps(lrv, vv, wv));
    }
    for (; i < n; ++i) {
        v[i] = momentum * v[i] + g[i] + wd * w[i];
        w[i] -= lr * v[i];
    }
}

void scale_channels_avx2(const float* x, const float* s, float* y,
                         int channels, int64_t hw) {
    for (int c = 0; c < channels; ++c) {
        const __m256 sv = _mm256_set1_ps(s[c]);
        const float* src = x + c * hw;
        float* dst = y + c * hw;
        int64_t i = 0;
        for (; i + 8 <= hw; i += 8)
            _mm256_storeu_ps(dst + i, _mm256_mul_ps(_mm256_loadu_ps(src + i), sv));
        for (; i < hw; ++i) dst[i] = src[i] * s[c];
    }
}

}  // namespace

const Kernels kernels_avx2 = {
    "avx2",
    sgemm_avx2,
    silu_avx2,
    silu_backward_avx2,
    sigmoid_avx2,
    add_avx2,
    mul_avx2,
    axpy_avx2,
    sum_avx2,
    sgd_step_avx2,
    scale_channels_avx2,
};

}  // namespace stdet::kern

#endif  // x86-64
