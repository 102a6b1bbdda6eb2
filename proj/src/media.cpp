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

#include "uvcg/media.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <system_error>

#include <nlohmann/json.hpp>

#include "png_io.hpp"
#include "uvcg/error.hpp"

namespace uvcg {

namespace fs = std::filesystem;
using nlohmann::json;

FrameImage::FrameImage(int width, int height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) throw ConfigError("frame dimensions must be positive");
    if (pixels_.size() != static_cast<std::size_t>(width) * height * kChannels) {
        throw ConfigError("pixel buffer length does not match height*width*3");
    }
    for (float v : pixels_) {
        if (!(v >= 0.0f && v <= 1.0f)) throw ConfigError("pixel intensity outside [0, 1]");
    }
}

FrameImage FrameImage::filled(int width, int height, float value) {
    return FrameImage(width, height,
                      std::vector<float>(static_cast<std::size_t>(std::max(width, 0)) *
                                             std::max(height, 0) * kChannels,
                                         value));
}

VideoClip::VideoClip(std::vector<FrameImage> frames, Rational fps, std::string name)
    : frames_(std::move(frames)), fps_(fps), name_(std::move(name)) {
    if (frames_.empty()) throw ConfigError("a clip needs at least one frame");
    if (fps_.num <= 0 || fps_.den <= 0) throw ConfigError("fps must be a positive rational");
    for (const auto& f : frames_) {
        if (f.width() != frames_.front().width() || f.height() != frames_.front().height()) {
            throw IntegrityError("frames of one clip must share a resolution");
        }
    }
}

std::uint8_t quantize(float value) {
    const double scaled = std::lround(static_cast<double>(value) * 255.0);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

namespace {

// Matches exactly one %d conversion with optional zero-padded width.
const std::regex& pattern_token() {
    static const std::regex re(R"(%(0?)(\d*)d)");
    return re;
}

void check_pattern(const std::string& pattern) {
    auto begin = std::sregex_iterator(pattern.begin(), pattern.end(), pattern_token());
    if (std::distance(begin, std::sregex_iterator()) != 1) {
        throw FormatError("frame_file_pattern needs exactly one %d conversion: " + pattern);
    }
    if (pattern.find('/') != std::string::npos) {
        throw FormatError("frame_file_pattern must not contain directories: " + pattern);
    }
}

std::regex pattern_matcher(const std::string& pattern) {
    std::smatch m;
    std::regex_search(pattern, m, pattern_token());
    auto escape = [](const std::string& s) {
        static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
        return std::regex_replace(s, special, R"(\$&)");
    };
    return std::regex(escape(m.prefix().str()) + "[0-9]+" + escape(m.suffix().str()));
}

}  // namespace

std::string format_frame_name(const std::string& pattern, int index) {
    check_pattern(pattern);
    std::smatch m;
    std::regex_search(pattern, m, pattern_token());
    std::string digits = std::to_string(index);
    const int width = m[2].length() > 0 ? std::stoi(m[2].str()) : 0;
    if (static_cast<int>(digits.size()) < width) {
        digits.insert(0, static_cast<std::size_t>(width) - digits.size(), m[1].length() > 0 ? '0' : ' ');
    }
    return m.prefix().str() + digits + m.suffix().str();
}

Manifest read_manifest(const fs::path& directory) {
    const fs::path path = directory / kManifestFile;
    std::ifstream in(path);
    if (!in) throw FormatError("missing " + path.string());
    Manifest manifest;
    try {
        const json doc = json::parse(in);
        manifest.frame_count = doc.at("frame_count").get<int>();
        manifest.width = doc.at("width").get<int>();
        manifest.height = doc.at("height").get<int>();
        manifest.fps.num = doc.at("fps_num").get<std::int64_t>();
        manifest.fps.den = doc.at("fps_den").get<std::int64_t>();
        manifest.frame_file_pattern = doc.value("frame_file_pattern", std::string(kDefaultFramePattern));
    } catch (const json::exception& e) {
        throw FormatError("malformed manifest " + path.string() + ": " + e.what());
    }
    if (manifest.frame_count < 1 || manifest.width < 1 || manifest.height < 1 || manifest.fps.num < 1 ||
        manifest.fps.den < 1) {
        throw FormatError("manifest fields must be positive: " + path.string());
    }
    check_pattern(manifest.frame_file_pattern);
    return manifest;
}

void write_manifest(const Manifest& manifest, const fs::path& directory) {
    const json doc = {
        {"frame_count", manifest.frame_count},
        {"width", manifest.width},
        {"height", manifest.height},
        {"fps_num", manifest.fps.num},
        {"fps_den", manifest.fps.den},
        {"frame_file_pattern", manifest.frame_file_pattern},
    };
    const fs::path path = directory / kManifestFile;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + path.string());
}

VideoClip load_clip(const fs::path& directory) {
    const Manifest manifest = read_manifest(directory);

    const std::regex matcher = pattern_matcher(manifest.frame_file_pattern);
    int present = 0;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(directory, ec)) {
        if (entry.is_regular_file() && std::regex_match(entry.path().filename().string(), matcher)) ++present;
    }
    if (ec) throw IoError("cannot list " + directory.string() + ": " + ec.message());
    if (present != manifest.frame_count) {
        throw IntegrityError("manifest frame_count " + std::to_string(manifest.frame_count) + " but " +
                             std::to_string(present) + " frame files in " + directory.string());
    }

    std::vector<FrameImage> frames;
    frames.reserve(static_cast<std::size_t>(manifest.frame_count));
    for (int i = 0; i < manifest.frame_count; ++i) {
        const fs::path file = directory / format_frame_name(manifest.frame_file_pattern, i);
        if (!fs::exists(file)) throw IntegrityError("missing frame file " + file.string());
        const detail::Rgb8Image image = detail::read_png_rgb8(file);
        if (image.width != manifest.width || image.height != manifest.height) {
            throw IntegrityError("frame " + file.string() + " is " + std::to_string(image.width) + "x" +
                                 std::to_string(image.height) + ", manifest says " +
                                 std::to_string(manifest.width) + "x" + std::to_string(manifest.height));
        }
        std::vector<float> pixels(image.bytes.size());
        for (std::size_t k = 0; k < pixels.size(); ++k) pixels[k] = static_cast<float>(image.bytes[k]) / 255.0f;
        frames.emplace_back(image.width, image.height, std::move(pixels));
    }

    std::string name = fs::absolute(directory).lexically_normal().filename().string();
    if (name.empty()) name = fs::absolute(directory).lexically_normal().parent_path().filename().string();
    return VideoClip(std::move(frames), manifest.fps, std::move(name));
}

Manifest save_clip(const VideoClip& clip, const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());

    Manifest manifest;
    manifest.frame_count = static_cast<int>(clip.length());
    manifest.width = clip.width();
    manifest.height = clip.height();
    manifest.fps = clip.fps();

    std::vector<std::uint8_t> bytes;
    for (std::size_t i = 0; i < clip.length(); ++i) {
        const auto pixels = clip.frame(i).pixels();
        bytes.resize(pixels.size());
        for (std::size_t k = 0; k < pixels.size(); ++k) bytes[k] = quantize(pixels[k]);
        detail::write_png_rgb8(directory / format_frame_name(manifest.frame_file_pattern, static_cast<int>(i)),
                               clip.width(), clip.height(), bytes);
    }
    write_manifest(manifest, directory);
    return manifest;
}

}  // namespace uvcg
