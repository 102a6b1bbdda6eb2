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
#include <filesystem>
#include <span>
#include <vector>

namespace uvcg::detail {

struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bytes;  // height * width * 3, interleaved
};

/// Reads an 8-bit RGB PNG. Grayscale, palette, alpha and 16-bit images are
/// rejected with FormatError.
Rgb8Image read_png_rgb8(const std::filesystem::path& path);

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> bytes);

}  // namespace uvcg::detail
