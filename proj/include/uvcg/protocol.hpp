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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "uvcg/error.hpp"

// Binary request/response protocol spoken with model sidecars over stdio.
//
// message := u64 LE body_length, body
// body    := "UVCG" | u8 version (=1) | u8 opcode | block*
// block   := u8 dtype | u8 ndim | u32 LE dims[ndim] | payload
//   dtype 0x01  float32 LE, row-major, product(dims) elements
//   dtype 0x10  UTF-8 text, ndim must be 1, dims[0] bytes
// Blocks run to the end of the body; there is no block count.

namespace uvcg::protocol {

inline constexpr std::array<char, 4> kMagic{'U', 'V', 'C', 'G'};
inline constexpr std::uint8_t kVersion = 1;
/// Upper bound on a body, guards against absurd length prefixes.
inline constexpr std::uint64_t kMaxBodyBytes = std::uint64_t{1} << 30;

enum class Opcode : std::uint8_t {
    hello = 1,
    encode = 2,
    loss_grad = 3,
    embed_image = 4,
    embed_text = 5,
    error = 6,
    result = 7,
};

enum class DType : std::uint8_t {
    float32 = 0x01,
    utf8 = 0x10,
};

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    [[nodiscard]] std::size_t element_count() const;
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

using Block = std::variant<Tensor, std::string>;

struct Message {
    std::uint8_t version = kVersion;
    Opcode opcode = Opcode::hello;
    std::vector<Block> blocks;

    friend bool operator==(const Message&, const Message&) = default;
};

/// A malformed message. code is one of "framing", "magic",
/// "unsupported_version", "opcode", "dtype".
class ProtocolError : public SidecarError {
  public:
    ProtocolError(std::string code, const std::string& what) : SidecarError(what), code_(std::move(code)) {}
    [[nodiscard]] const std::string& code() const { return code_; }

  private:
    std::string code_;
};

/// Full wire image including the length prefix.
std::vector<std::uint8_t> encode_message(const Message& message);

/// Parses a body (without the length prefix).
Message decode_body(std::span<const std::uint8_t> body);

/// Reads the u64 LE length prefix from 8 bytes.
std::uint64_t decode_length(std::span<const std::uint8_t, 8> prefix);

Message make_error(const std::string& code, const std::string& detail);

/// For an error message, its code and detail; nullopt otherwise.
struct ErrorInfo {
    std::string code;
    std::string detail;
};
std::optional<ErrorInfo> error_info(const Message& message);

}  // namespace uvcg::protocol
