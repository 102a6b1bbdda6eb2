/*
 * Copyright 2026 The uvcg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uvcg/kernels/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include "minmax.hpp"

namespace uvcg::kernels {
namespace {

// NEON vmax/vmin follow IEEE maxNum semantics, so the x86 MAXPS/MINPS
// selection rule is spelled out with compare + select.
inline float32x4_t max_ps(float32x4_t a, float32x4_t b) { return vbslq_f32(vcgtq_f32(a, b), a, b); }
inline float32x4_t min_ps(float32x4_t a, float32x4_t b) { return vbslq_f32(vcltq_f32(a, b), a, b); }

inline void axpy_row(int n, float v, const float* row, float* acc) {
    const float32x4_t vv = vdupq_n_f32(v);
    int j = 0;
    for (; j + 4 <= n; j += 4) {
        vst1q_f32(acc + j, vaddq_f32(vld1q_f32(acc + j), vmulq_f32(vv, vld1q_f32(row + j))));
    }
    for (; j < n; ++j) acc[j] = acc[j] + v * row[j];
}

void conv_forward(const StridedConvShape& s, const float* in, const float* w, const float* bias, float* out) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* acc = out + (static_cast<std::size_t>(oy) * ow + ox) * s.cout;
            for (int co = 0; co < s.cout; ++co) acc[co] = bias[co];
            for (int ky = 0; ky < 3; ++ky) {
                const int iy = 2 * oy - 1 + ky;
                if (iy < 0 || iy >= s.in_h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int ix = 2 * ox - 1 + kx;
                    if (ix < 0 || ix >= s.in_w) continue;
                    const float* px = in + (static_cast<std::size_t>(iy) * s.in_w + ix) * s.cin;
                    const float* tap = w + static_cast<std::size_t>(ky * 3 + kx) * s.cin * s.cout;
                    for (int ci = 0; ci < s.cin; ++ci) {
                        axpy_row(s.cout, px[ci], tap + static_cast<std::size_t>(ci) * s.cout, acc);
                    }
                }
            }
        }
    }
}

void conv_backward_input(const StridedConvShape& s, const float* grad_out, const float* wt, float* grad_in) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    const std::size_t n_in = static_cast<std::size_t>(s.in_h) * s.in_w * s.cin;
    for (std::size_t i = 0; i < n_in; ++i) grad_in[i] = 0.0f;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* g = grad_out + (static_cast<std::size_t>(oy) * ow + ox) * s.cout;
            for (int ky = 0; ky < 3; ++ky) {
                const int iy = 2 * oy - 1 + ky;
                if (iy < 0 || iy >= s.in_h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int ix = 2 * ox - 1 + kx;
                    if (ix < 0 || ix >= s.in_w) continue;
                    float* dst = grad_in + (static_cast<std::size_t>(iy) * s.in_w + ix) * s.cin;
                    const float* tap = wt + static_cast<std::size_t>(ky * 3 + kx) * s.cout * s.cin;
                    for (int co = 0; co < s.cout; ++co) {
                        axpy_row(s.cin, g[co], tap + static_cast<std::size_t>(co) * s.cin, dst);
                    }
                }
            }
        }
    }
}

void pointwise_forward(std::size_t pixels, int cin, int cout, const float* in, const float* w, const float* bias,
                       float* out) {
    for (std::size_t p = 0; p < pixels; ++p) {
        float* acc = out + p * cout;
        const float* px = in + p * cin;
        for (int co = 0; co < cout; ++co) acc[co] = bias[co];
        for (int ci = 0; ci < cin; ++ci) axpy_row(cout, px[ci], w + static_cast<std::size_t>(ci) * cout, acc);
    }
}

void pointwise_backward_input(std::size_t pixels, int cin, int cout, const float* grad_out, const float* wt,
                              float* grad_in) {
    for (std::size_t p = 0; p < pixels; ++p) {
        float* acc = grad_in + p * cin;
        const float* g = grad_out + p * cout;
        for (int ci = 0; ci < cin; ++ci) acc[ci] = 0.0f;
        for (int co = 0; co < cout; ++co) axpy_row(cin, g[co], wt + static_cast<std::size_t>(co) * cin, acc);
    }
}

void tanh_backward(std::size_t n, const float* act, float* grad) {
    const float32x4_t one = vdupq_n_f32(1.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t a = vld1q_f32(act + i);
        vst1q_f32(grad + i, vmulq_f32(vld1q_f32(grad + i), vsubq_f32(one, vmulq_f32(a, a))));
    }
    for (; i < n; ++i) grad[i] = grad[i] * (1.0f - act[i] * act[i]);
}

void pgd_step(std::size_t n, const float* x, const float* grad, float alpha, float epsilon, float lo, float hi,
              float* delta) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    const float32x4_t one = vdupq_n_f32(1.0f);
    const float32x4_t va = vdupq_n_f32(alpha);
    const float32x4_t veps = vdupq_n_f32(epsilon);
    const float32x4_t vneg = vdupq_n_f32(-epsilon);
    const float32x4_t vlo = vdupq_n_f32(lo);
    const float32x4_t vhi = vdupq_n_f32(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t g = vld1q_f32(grad + i);
        const float32x4_t xi = vld1q_f32(x + i);
        const float32x4_t pos = vbslq_f32(vcgtq_f32(g, zero), one, zero);
        const float32x4_t neg = vbslq_f32(vcltq_f32(g, zero), one, zero);
        float32x4_t d = vsubq_f32(vld1q_f32(delta + i), vmulq_f32(va, vsubq_f32(pos, neg)));
        d = max_ps(d, vneg);
        d = min_ps(d, veps);
        d = max_ps(d, vsubq_f32(vlo, xi));
        d = min_ps(d, vsubq_f32(vhi, xi));
        vst1q_f32(delta + i, d);
    }
    for (; i < n; ++i) {
        const float g = grad[i];
        const float sign = (g > 0.0f ? 1.0f : 0.0f) - (g < 0.0f ? 1.0f : 0.0f);
        float d = delta[i] - alpha * sign;
        d = detail::max_ps(d, -epsilon);
        d = detail::min_ps(d, epsilon);
        d = detail::max_ps(d, lo - x[i]);
        d = detail::min_ps(d, hi - x[i]);
        delta[i] = d;
    }
}

const KernelSet kNeon{
    "neon", conv_forward, conv_backward_input, pointwise_forward, pointwise_backward_input, tanh_backward, pgd_step,
};

}  // namespace

const KernelSet* neon_kernels() { return &kNeon; }

}  // namespace uvcg::kernels

#else

namespace uvcg::kernels {
const KernelSet* neon_kernels() { return nullptr; }
}  // namespace uvcg::kernels

#endif
