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

#include <span>

namespace uvcg {

/// Cosine similarity accumulated in double, clamped to [-1, 1]; 0 if either
/// vector is all zero. Throws ConfigError on a size mismatch.
double cosine_similarity(std::span<const float> a, std::span<const float> b);

/// Left-to-right sum divided by the count. Every aggregate in a report is
/// produced by this function, so recomputing it reproduces the value exactly.
double arithmetic_mean(std::span<const double> values);

}  // namespace uvcg
