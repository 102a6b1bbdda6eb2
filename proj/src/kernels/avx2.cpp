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

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "minmax.hpp"

#define UVCG_AVX2 __attribute__((target("avx2")))

namespace uvcg::kernels {
namespace {

// acc[j] = acc[j] + v * row[j] for j < n; lanes are independent, so this is
// exactly the scalar loop.
UVCG_AVX2 inline void axpy_row(int n, float v, const float* row, float* acc) {
    const __m256 vv = _mm256_set1_ps(v);
    int j = 0;
    for (; j + 8 <= n; j += 8) {
        const __m256 a = _mm256_loadu_ps(acc + j);
        const __m256 r = _mm256_loadu_ps(row + j);
        _mm256_storeu_ps(acc + j, _mm256_add_ps(a, _mm256_mul_ps(vv, r)));
    }
    for (; j < n; ++j) acc[j] = acc[j] + v * row[j];
}

// Bounds of the 3x3 taps that land inside the input for output (oy, ox).
struct TapRange {
    int ky0, ky1, kx0, kx1;
};

inline TapRange taps_for(const StridedConvShape& s, int oy, int ox) {
    TapRange r{0, 3, 0, 3};
    if (2 * oy - 1 < 0) r.ky0 = 1;
    if (2 * oy + 1 >= s.in_h) r.ky1 = 2;
    if (2 * ox - 1 < 0) r.kx0 = 1;
    if (2 * ox + 1 >= s.in_w) r.kx1 = 2;
    return r;
}

UVCG_AVX2 void conv_forward(const StridedConvShape& s, const float* in, const float* w, const float* bias,
                            float* out) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    const int vec_end = s.cout - s.cout % 8;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            float* dst = out + (static_cast<std::size_t>(oy) * ow + ox) * s.cout;
            const TapRange t = taps_for(s, oy, ox);
            // Each 8-wide block of output channels stays in a register while
            // all taps are accumulated in the reference order.
            for (int co = 0; co < vec_end; co += 8) {
                __m256 acc = _mm256_loadu_ps(bias + co);
                for (int ky = t.ky0; ky < t.ky1; ++ky) {
                    const int iy = 2 * oy - 1 + ky;
                    for (int kx = t.kx0; kx < t.kx1; ++kx) {
                        const int ix = 2 * ox - 1 + kx;
                        const float* px = in + (static_cast<std::size_t>(iy) * s.in_w + ix) * s.cin;
                        const float* tap = w + static_cast<std::size_t>(ky * 3 + kx) * s.cin * s.cout + co;
                        for (int ci = 0; ci < s.cin; ++ci) {
                            const __m256 row = _mm256_loadu_ps(tap + static_cast<std::size_t>(ci) * s.cout);
                            acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(px[ci]), row));
                        }
                    }
                }
                _mm256_storeu_ps(dst + co, acc);
            }
            for (int co = vec_end; co < s.cout; ++co) {
                float acc = bias[co];
                for (int ky = t.ky0; ky < t.ky1; ++ky) {
                    const int iy = 2 * oy - 1 + ky;
                    for (int kx = t.kx0; kx < t.kx1; ++kx) {
                        const int ix = 2 * ox - 1 + kx;
                        const float* px = in + (static_cast<std::size_t>(iy) * s.in_w + ix) * s.cin;
                        const float* tap = w + static_cast<std::size_t>(ky * 3 + kx) * s.cin * s.cout + co;
                        for (int ci = 0; ci < s.cin; ++ci) acc = acc + px[ci] * tap[static_cast<std::size_t>(ci) * s.cout];
                    }
                }
                dst[co] = acc;
            }
        }
    }
}

UVCG_AVX2 void conv_backward_input(const StridedConvShape& s, const float* grad_out, const float* wt,
                                   float* grad_in) {
    const int oh = s.out_h();
    const int ow = s.out_w();
    const std::size_t n_in = static_cast<std::size_t>(s.in_h) * s.in_w * s.cin;
    for (std::size_t i = 0; i < n_in; ++i) grad_in[i] = 0.0f;
    const int vec_end = s.cin - s.cin % 8;
    for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
            const float* g = grad_out + (static_cast<std::size_t>(oy) * ow + ox) * s.cout;
            const TapRange t = taps_for(s, oy, ox);
            for (int ky = t.ky0; ky < t.ky1; ++ky) {
                const int iy = 2 * oy - 1 + ky;
                for (int kx = t.kx0; kx < t.kx1; ++kx) {
                    const int ix = 2 * ox - 1 + kx;
                    float* dst = grad_in + (static_cast<std::size_t>(iy) * s.in_w + ix) * s.cin;
                    const float* tap = wt + static_cast<std::size_t>(ky * 3 + kx) * s.cout * s.cin;
                    for (int ci = 0; ci < vec_end; ci += 8) {
                        __m256 acc = _mm256_loadu_ps(dst + ci);
                        for (int co = 0; co < s.cout; ++co) {
                            const __m256 row = _mm256_loadu_ps(tap + static_cast<std::size_t>(co) * s.cin + ci);
                            acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(g[co]), row));
                        }
                        _mm256_storeu_ps(dst + ci, acc);
                    }
                    for (int ci = vec_end; ci < s.cin; ++ci) {
                        float acc = dst[ci];
                        for (int co = 0; co < s.cout; ++co) acc = acc + g[co] * tap[static_cast<std::size_t>(co) * s.cin + ci];
                        dst[ci] = acc;
                    }
                }
            }
        }
    }
}

UVCG_AVX2 void pointwise_forward(std::size_t pixels, int cin, int cout, const float* in, const float* w,
                                 const float* bias, float* out) {
    for (std::size_t p = 0; p < pixels; ++p) {
        float* acc = out + p * cout;
        const float* px = in + p * cin;
        for (int co = 0; co < cout; ++co) acc[co] = bias[co];
        for (int ci = 0; ci < cin; ++ci) axpy_row(cout, px[ci], w + static_cast<std::size_t>(ci) * cout, acc);
    }
}

UVCG_AVX2 void pointwise_backward_input(std::size_t pixels, int cin, int cout, const float* grad_out,
                                        const float* wt, float* grad_in) {
    for (std::size_t p = 0; p < pixels; ++p) {
        float* acc = grad_in + p * cin;
        const float* g = grad_out + p * cout;
        for (int ci = 0; ci < cin; ++ci) acc[ci] = 0.0f;
        for (int co = 0; co < cout; ++co) axpy_row(cin, g[co], wt + static_cast<std::size_t>(co) * cin, acc);
    }
}

UVCG_AVX2 void tanh_backward(std::size_t n, const float* act, float* grad) {
    const __m256 one = _mm256_set1_ps(1.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 a = _mm256_loadu_ps(act + i);
        const __m256 g = _mm256_loadu_ps(grad + i);
        _mm256_storeu_ps(grad + i, _mm256_mul_ps(g, _mm256_sub_ps(one, _mm256_mul_ps(a, a))));
    }
    for (; i < n; ++i) grad[i] = grad[i] * (1.0f - act[i] * act[i]);
}

UVCG_AVX2 void pgd_step(std::size_t n, const float* x, const float* grad, float alpha, float epsilon, float lo,
                        float hi, float* delta) {
    const __m256 zero = _mm256_setzero_ps();
    const __m256 one = _mm256_set1_ps(1.0f);
    const __m256 va = _mm256_set1_ps(alpha);
    const __m256 veps = _mm256_set1_ps(epsilon);
    const __m256 vneg = _mm256_set1_ps(-epsilon);
    const __m256 vlo = _mm256_set1_ps(lo);
    const __m256 vhi = _mm256_set1_ps(hi);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 g = _mm256_loadu_ps(grad + i);
        const __m256 xi = _mm256_loadu_ps(x + i);
        const __m256 pos = _mm256_and_ps(_mm256_cmp_ps(g, zero, _CMP_GT_OQ), one);
        const __m256 neg = _mm256_and_ps(_mm256_cmp_ps(g, zero, _CMP_LT_OQ), one);
        __m256 d = _mm256_sub_ps(_mm256_loadu_ps(delta + i), _mm256_mul_ps(va, _mm256_sub_ps(pos, neg)));
        d = _mm256_max_ps(d, vneg);
        d = _mm256_min_ps(d, veps);
        d = _mm256_max_ps(d, _mm256_sub_ps(vlo, xi));
        d = _mm256_min_ps(d, _mm256_sub_ps(vhi, xi));
        _mm256_storeu_ps(delta + i, d);
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

const KernelSet kAvx2{
    "avx2", conv_forward, conv_backward_input, pointwise_forward, pointwise_backward_input, tanh_backward, pgd_step,
};

}  // namespace

const KernelSet* avx2_kernels() {
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &kAvx2 : nullptr;
}

}  // namespace uvcg::kernels

#else

namespace uvcg::kernels {
const KernelSet* avx2_kernels() { return nullptr; }
}  // namespace uvcg::kernels

#endif
