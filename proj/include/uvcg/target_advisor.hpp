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

#include <string>
#include <vector>

#include "uvcg/encoder.hpp"
#include "uvcg/media.hpp"

namespace uvcg {

struct TargetScore {
    std::string candidate_name;
    double proximity = 0.0;   // mean latent cosine similarity, [-1, 1]
    double simplicity = 0.0;  // 1 - normalized mean gradient magnitude
    double combined = 0.0;    // w1 * proximity + w2 * simplicity
};

/// Mean over protected frames i of cos(E(protected_i), E(candidate_{i mod m})).
/// Throws ConfigError on a resolution mismatch.
double proximity_score(const VideoClip& protected_clip, const VideoClip& candidate, const EncoderEndpoint& endpoint);

/// 1 - mean_frames(mean_{pixels, channels} sqrt(gx^2 + gy^2)) / sqrt(2), with
/// forward differences gx = f(y, x+1) - f(y, x), gy = f(y+1, x) - f(y, x)
/// over the pixels that have both neighbours. Single-row or single-column
/// frames score 1.
double simplicity_score(const VideoClip& candidate);

/// Scores every candidate and sorts by combined descending, ties by name
/// ascending. Throws ConfigError when candidates is empty.
std::vector<TargetScore> rank_targets(const VideoClip& protected_clip, const std::vector<VideoClip>& candidates,
                                      const EncoderEndpoint& endpoint, double w1 = 0.5, double w2 = 0.5);

}  // namespace uvcg
