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

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

// Data-parallel inner loops of the engine. Every kernel set computes each
// output element with exactly the same sequence of IEEE single-precision
// operations as the scalar reference (no FMA contraction, no reassociation,
// min/max with x86 MINPS/MAXPS semantics), so all sets are bit-identical and
// the choice only affects speed.

namespace uvcg::kernels {

/// Geometry of one 3x3, stride-2, zero-padding-1 convolution over HWC
/// activations. Output is (in_h / 2) x (in_w / 2) x cout.
struct StridedConvShape {
    int in_h = 0;
    int in_w = 0;
    int cin = 0;
    int cout = 0;

    [[nodiscard]] int out_h() const { return in_h / 2; }
    [[nodiscard]] int out_w() const { return in_w / 2; }
};

struct KernelSet {
    const char* name;

    /// out[oy,ox,:] = bias + sum_{ky,kx,ci} in[2oy-1+ky, 2ox-1+kx, ci] * w[ky,kx,ci,:]
    /// Accumulation order: bias, then ky, kx, ci ascending.
    /// w layout: [3][3][cin][cout].
    void (*conv3x3s2_forward)(const StridedConvShape& shape, const float* in, const float* w, const float* bias,
                              float* out);

    /// grad_in (in_h x in_w x cin) is overwritten with the input gradient of
    /// the convolution given grad_out (out_h x out_w x cout). Contributions
    /// are added in order oy, ox, ky, kx, co ascending.
    /// wt layout: [3][3][cout][cin] (the per-tap transpose of w).
    void (*conv3x3s2_backward_input)(const StridedConvShape& shape, const float* grad_out, const float* wt,
                                     float* grad_in);

    /// out[p,:] = bias + sum_ci in[p,ci] * w[ci,:], w layout [cin][cout].
    void (*pointwise_forward)(std::size_t pixels, int cin, int cout, const float* in, const float* w,
                              const float* bias, float* out);

    /// grad_in[p,:] = sum_co grad_out[p,co] * wt[co,:], wt layout [cout][cin].
    void (*pointwise_backward_input)(std::size_t pixels, int cin, int cout, const float* grad_out,
                                     const float* wt, float* grad_in);

    /// grad[i] *= 1 - act[i]^2 (tanh derivative expressed through its output).
    void (*tanh_backward)(std::size_t n, const float* act, float* grad);

    /// One projected sign-descent step, in place on delta:
    ///   d = delta - alpha * sign(grad)          (sign(0) = sign(NaN) = 0)
    ///   d = clamp(d, -epsilon, epsilon)
    ///   d = clamp(d, lo - x, hi - x)
    void (*pgd_step)(std::size_t n, const float* x, const float* grad, float alpha, float epsilon, float lo,
                     float hi, float* delta);
};

const KernelSet& scalar_kernels();

/// nullptr when the ISA is not compiled in or not supported by this CPU.
const KernelSet* avx2_kernels();
const KernelSet* neon_kernels();

/// All sets usable on this machine, scalar first.
std::vector<const KernelSet*> available_kernel_sets();

/// The set used by the engine: UVCG_KERNELS=<name> if set and available,
/// otherwise the widest available set. Resolved once per process.
const KernelSet& active_kernels();

/// Looks up a set by name; nullptr if unknown or unavailable.
const KernelSet* find_kernel_set(std::string_view name);

}  // namespace uvcg::kernels
