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

#include <cstdint>
#include <random>

namespace uvcg {

/// Seeded generator with a portable real mapping. std::mt19937_64 output is
/// fixed by the standard, but std::uniform_real_distribution is not, so
/// reals are derived here: u = (next() >> 11) * 2^-53, u in [0, 1).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// lo + (hi - lo) * u evaluated in double, rounded once to float.
    float uniform(float lo, float hi) {
        const double l = lo;
        const double h = hi;
        return static_cast<float>(l + (h - l) * uniform01());
    }

    std::uint64_t next() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace uvcg
