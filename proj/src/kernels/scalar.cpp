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

#include "minmax.hpp"

namespace uvcg::kernels {
namespace {

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
                        const float v = px[ci];
                        const float* row = tap + static_cast<std::size_t>(ci) * s.cout;
                        for (int co = 0; co < s.cout; ++co) acc[co] = acc[co] + v * row[co];
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
                        const float v = g[co];
                        const float* row = tap + static_cast<std::size_t>(co) * s.cin;
                        for (int ci = 0; ci < s.cin; ++ci) dst[ci] = dst[ci] + v * row[ci];
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
        for (int ci = 0; ci < cin; ++ci) {
            const float v = px[ci];
            const float* row = w + static_cast<std::size_t>(ci) * cout;
            for (int co = 0; co < cout; ++co) acc[co] = acc[co] + v * row[co];
        }
    }
}

void pointwise_backward_input(std::size_t pixels, int cin, int cout, const float* grad_out, const float* wt,
                              float* grad_in) {
    for (std::size_t p = 0; p < pixels; ++p) {
        float* acc = grad_in + p * cin;
        const float* g = grad_out + p * cout;
        for (int ci = 0; ci < cin; ++ci) acc[ci] = 0.0f;
        for (int co = 0; co < cout; ++co) {
            const float v = g[co];
            const float* row = wt + static_cast<std::size_t>(co) * cin;
            for (int ci = 0; ci < cin; ++ci) acc[ci] = acc[ci] + v * row[ci];
        }
    }
}

void tanh_backward(std::size_t n, const float* act, float* grad) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = grad[i] * (1.0f - act[i] * act[i]);
}

void pgd_step(std::size_t n, const float* x, const float* grad, float alpha, float epsilon, float lo, float hi,
              float* delta) {
    for (std::size_t i = 0; i < n; ++i) {
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

const KernelSet kScalar{
    "scalar", conv_forward, conv_backward_input, pointwise_forward, pointwise_backward_input, tanh_backward, pgd_step,
};

}  // namespace

const KernelSet& scalar_kernels() { return kScalar; }

}  // namespace uvcg::kernels
