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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace uvcg {

/// Frame rate as an exact rational, e.g. 30000/1001.
struct Rational {
    std::int64_t num = 25;
    std::int64_t den = 1;

    [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

/// An RGB frame stored row-major, interleaved (height x width x 3), with
/// normalized intensities in [0, 1].
class FrameImage {
  public:
    static constexpr int kChannels = 3;

    /// Throws ConfigError if dimensions are non-positive, the buffer has the
    /// wrong length, or any value lies outside [0, 1].
    FrameImage(int width, int height, std::vector<float> pixels);

    /// A frame filled with a single intensity.
    static FrameImage filled(int width, int height, float value);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] int height() const { return height_; }
    [[nodiscard]] std::size_t size() const { return pixels_.size(); }
    [[nodiscard]] std::span<const float> pixels() const { return pixels_; }

    [[nodiscard]] float at(int y, int x, int c) const {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
    }

    friend bool operator==(const FrameImage&, const FrameImage&) = default;

  private:
    int width_;
    int height_;
    std::vector<float> pixels_;
};

/// An ordered, non-empty sequence of equally sized frames.
class VideoClip {
  public:
    VideoClip(std::vector<FrameImage> frames, Rational fps, std::string name);

    [[nodiscard]] std::size_t length() const { return frames_.size(); }
    [[nodiscard]] int width() const { return frames_.front().width(); }
    [[nodiscard]] int height() const { return frames_.front().height(); }
    [[nodiscard]] const std::vector<FrameImage>& frames() const { return frames_; }
    [[nodiscard]] const FrameImage& frame(std::size_t i) const { return frames_.at(i); }
    [[nodiscard]] Rational fps() const { return fps_; }
    [[nodiscard]] const std::string& name() const { return name_; }

    friend bool operator==(const VideoClip&, const VideoClip&) = default;

  private:
    std::vector<FrameImage> frames_;
    Rational fps_;
    std::string name_;
};

inline constexpr const char* kDefaultFramePattern = "frame_%05d.png";
inline constexpr const char* kManifestFile = "manifest.json";

struct Manifest {
    int frame_count = 0;
    int width = 0;
    int height = 0;
    Rational fps;
    std::string frame_file_pattern = kDefaultFramePattern;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Expands a printf-style pattern holding exactly one integer conversion
/// (e.g. "frame_%05d.png") for the given index.
std::string format_frame_name(const std::string& pattern, int index);

Manifest read_manifest(const std::filesystem::path& directory);
void write_manifest(const Manifest& manifest, const std::filesystem::path& directory);

/// Loads a frame directory (manifest.json plus 8-bit RGB PNG frames). The
/// clip name is the directory's final path component.
VideoClip load_clip(const std::filesystem::path& directory);

/// Writes frames as 8-bit RGB PNG with round-to-nearest quantization, then
/// the manifest. Creates the directory if needed.
Manifest save_clip(const VideoClip& clip, const std::filesystem::path& directory);

/// Round-to-nearest 8-bit quantization of a normalized intensity.
std::uint8_t quantize(float value);

}  // namespace uvcg
