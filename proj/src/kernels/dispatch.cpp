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

#include <cstdlib>
#include <string>

#include "uvcg/kernels/kernels.hpp"

namespace uvcg::kernels {

std::vector<const KernelSet*> available_kernel_sets() {
    std::vector<const KernelSet*> sets{&scalar_kernels()};
    if (const KernelSet* k = avx2_kernels()) sets.push_back(k);
    if (const KernelSet* k = neon_kernels()) sets.push_back(k);
    return sets;
}

const KernelSet* find_kernel_set(std::string_view name) {
    for (const KernelSet* k : available_kernel_sets()) {
        if (name == k->name) return k;
    }
    return nullptr;
}

const KernelSet& active_kernels() {
    static const KernelSet& chosen = [] () -> const KernelSet& {
        if (const char* forced = std::getenv("UVCG_KERNELS")) {
            if (const KernelSet* k = find_kernel_set(forced)) return *k;
        }
        return *available_kernel_sets().back();
    }();
    return chosen;
}

}  // namespace uvcg::kernels
