#include "stdet/kernels.hpp"

#include <cstdlib>
#include <stdexcept>

#if defined(__x86_64__) || defined(_M_X64)
#include <cpuid.h>
#endif

namespace stdet::kern {

std::string CpuCaps::to_string() const {
    std::string s = "x86-64";
    if (avx2) s += "+avx2";
    if (fma) s += "+fma";
    if (avx512f) s += "+avx512f";
    return s;
}

const CpuCaps& caps() {
    static const CpuCaps c = [] {
        CpuCaps r;
#if defined(__x86_64__) || defined(_M_X64)
        unsigned eax, ebx, ecx, edx;
        if (__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) {
            r.avx2 = (ebx >> 5) & 1;
            r.avx512f = (ebx >> 16) & 1;
        }
        if (__get_cpuid(1, &eax, &ebx, &ecx, &edx)) {
            r.fma = (ecx >> 12) & 1;
        }
#endif
        return r;
    }();
    return c;
}

namespace {
const Kernels* g_active = nullptr;

const Kernels* pick_default() {
    if (const char* env = std::getenv("STDET_KERNELS")) {
        std::string want = env;
        for (const Kernels* k : available()) {
            if (want == k->name) return k;
        }
        throw std::runtime_error("STDET_KERNELS=" + want + " not available on this CPU");
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (caps().avx2 && caps().fma) return &kernels_avx2;
#endif
    return &kernels_scalar;
}
}  // namespace

const Kernels& active() {
    if (!g_active) g_active = pick_default();
    return *g_active;
}

void select(const std::string& name) {
    for (const Kernels* k : available()) {
        if (name == k->name) {
            g_active = k;
            return;
        }
    }
    throw std::runtime_error("unknown kernel set: " + name);
}

std::vector<const Kernels*> available() {
    std::vector<const Kernels*> out{&kernels_scalar};
#if defined(__x86_64__) || defined(_M_X64)
    if (caps().avx2 && caps().fma) out.push_back(&kernels_avx2);
#endif
    return out;
}

void im2col(const float* img, int c_in, int h, int w, int kh, int kw,
            int stride, int pad, float* col) {
    const int out_h = conv_out_dim(h, kh, stride, pad);
    const int out_w = conv_out_dim(w, kw, stride, pad);
    const int64_t out_hw = int64_t(out_h) * out_w;
    for (int c = 0; c < c_in; ++c) {
        const float* src = img + int64_t(c) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                float* dst = col + (int64_t(c) * kh * kw + ky * kw + kx) * out_hw;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < out_w; ++ox) *dst++ = 0.0f;
                        continue;
                    }
                    const float* row = src + int64_t(iy) * w;
                    int ox = 0;
                    int ix = -pad + kx;
                    for (; ox < out_w && ix < 0; ++ox, ix += stride) *dst++ = 0.0f;
                    for (; ox < out_w && ix < w; ++ox, ix += stride) *dst++ = row[ix];
                    for (; ox < out_w; ++ox) *dst++ = 0.0f;
                }
            }
        }
    }
}

void col2im(const float* col, int c_in, int h, int w, int kh, int kw,
            int stride, int pad, float* img) {
    const int out_h = conv_out_dim(h, kh, stride, pad);
    const int out_w = conv_out_dim(w, kw, stride, pad);
    const int64_t out_hw = int64_t(out_h) * out_w;
    for (int c = 0; c < c_in; ++c) {
        float* dst = img + int64_t(c) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const float* src = col + (int64_t(c) * kh * kw + ky * kw + kx) * out_hw;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        src += out_w;
                        continue;
                    }
                    float* row = dst + int64_t(iy) * w;
                    int ox = 0;
                    int ix = -pad + kx;
                    for (; ox < out_w && ix < 0; ++ox, ix += stride) ++src;
                    for (; ox < out_w && ix < w; ++ox, ix += stride) row[ix] += *src++;
                    src += out_w - ox;
                }
            }
        }
    }
}

}  // namespace stdet::kern
