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

#include <mutex>
#include <set>
#include <span>
#include <string>
#include <sys/types.h>

#include "uvcg/protocol.hpp"

namespace uvcg {

/// Parsed hello response. The JSON document carries
///   {"supports": [opcodes], "deterministic": bool,
///    "latent_channels": int, "downsample_factor": int, "name": string}
struct SidecarCapabilities {
    std::set<protocol::Opcode> supports;
    bool deterministic = false;
    int latent_channels = 0;
    int downsample_factor = 1;
    std::string name;

    [[nodiscard]] bool has(protocol::Opcode op) const { return supports.count(op) != 0; }
};

/// Throws SidecarError if the document is malformed, not deterministic, or
/// advertises loss_grad without encode.
SidecarCapabilities parse_capabilities(const std::string& json);

/// An error reply from the sidecar (opcode 6).
class SidecarRequestError : public SidecarError {
  public:
    SidecarRequestError(std::string code, const std::string& detail)
        : SidecarError("sidecar error [" + code + "]: " + detail), code_(std::move(code)) {}
    [[nodiscard]] const std::string& code() const { return code_; }

  private:
    std::string code_;
};

/// A child process speaking the sidecar protocol on its stdin/stdout. The
/// command runs under /bin/sh -c; its stderr is inherited. One request is in
/// flight at a time.
class SidecarClient {
  public:
    /// Launches the command and performs the hello handshake.
    explicit SidecarClient(const std::string& command);
    ~SidecarClient();

    SidecarClient(const SidecarClient&) = delete;
    SidecarClient& operator=(const SidecarClient&) = delete;

    [[nodiscard]] const SidecarCapabilities& capabilities() const { return caps_; }

    /// Sends a request and returns the result message. Error replies raise
    /// SidecarRequestError; transport failures raise SidecarError.
    protocol::Message request(const protocol::Message& message);

    /// Low-level access used by protocol tests: write arbitrary bytes, then
    /// read one reply.
    protocol::Message exchange_raw(std::span<const std::uint8_t> bytes);

  private:
    void write_all(std::span<const std::uint8_t> bytes);
    void read_exact(std::uint8_t* dst, std::size_t n);
    protocol::Message read_message();
    void shutdown();

    std::mutex mutex_;
    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    SidecarCapabilities caps_;
};

}  // namespace uvcg
