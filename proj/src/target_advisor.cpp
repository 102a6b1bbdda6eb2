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

#include "uvcg/target_advisor.hpp"

#include <algorithm>
#include <cmath>

#include "uvcg/error.hpp"
#include "uvcg/protection.hpp"
#include "uvcg/similarity.hpp"

namespace uvcg {

double proximity_score(const VideoClip& protected_clip, const VideoClip& candidate, const EncoderEndpoint& endpoint) {
    if (protected_clip.width() != candidate.width() || protected_clip.height() != candidate.height()) {
        throw ConfigError("candidate '" + candidate.name() + "' resolution differs from the protected clip");
    }
    const LatentSequence ours = encode_sequence(endpoint, protected_clip);
    const LatentSequence theirs = encode_sequence(endpoint, candidate);
    double sum = 0.0;
    for (std::size_t i = 0; i < ours.length(); ++i) {
        sum += cosine_similarity(ours.at(i).values(), theirs.at(target_for_frame(i, theirs.length())).values());
    }
    return sum / static_cast<double>(ours.length());
}

double simplicity_score(const VideoClip& candidate) {
    const int w = candidate.width();
    const int h = candidate.height();
    if (w < 2 || h < 2) return 1.0;
    double total = 0.0;
    for (const FrameImage& f : candidate.frames()) {
        double frame_sum = 0.0;
        for (int y = 0; y + 1 < h; ++y) {
            for (int x = 0; x + 1 < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double v = f.at(y, x, c);
                    const double gx = f.at(y, x + 1, c) - v;
                    const double gy = f.at(y + 1, x, c) - v;
                    frame_sum += std::sqrt(gx * gx + gy * gy);
                }
            }
        }
        total += frame_sum / (static_cast<double>(w - 1) * (h - 1) * 3);
    }
    const double mean = total / static_cast<double>(candidate.length());
    return 1.0 - mean / std::sqrt(2.0);
}

std::vector<TargetScore> rank_targets(const VideoClip& protected_clip, const std::vector<VideoClip>& candidates,
                                      const EncoderEndpoint& endpoint, double w1, double w2) {
    if (candidates.empty()) throw ConfigError("at least one target candidate is required");
    std::vector<TargetScore> scores;
    scores.reserve(candidates.size());
    for (const VideoClip& c : candidates) {
        TargetScore s;
        s.candidate_name = c.name();
        s.proximity = proximity_score(protected_clip, c, endpoint);
        s.simplicity = simplicity_score(c);
        s.combined = w1 * s.proximity + w2 * s.simplicity;
        scores.push_back(std::move(s));
    }
    std::stable_sort(scores.begin(), scores.end(), [](const TargetScore& a, const TargetScore& b) {
        if (a.combined != b.combined) return a.combined > b.combined;
        return a.candidate_name < b.candidate_name;
    });
    return scores;
}

}  // namespace uvcg
