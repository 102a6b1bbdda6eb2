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

#include "uvcg/sidecar.hpp"

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "sidecar_encoder.hpp"

extern char** environ;

namespace uvcg {

using protocol::Message;
using protocol::Opcode;

SidecarCapabilities parse_capabilities(const std::string& text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (!doc.is_object()) throw SidecarError("sidecar capabilities are not a JSON object");
    SidecarCapabilities caps;
    try {
        for (int op : doc.at("supports").get<std::vector<int>>()) {
            if (op < 1 || op > 7) throw SidecarError("sidecar advertises unknown opcode " + std::to_string(op));
            caps.supports.insert(static_cast<Opcode>(op));
        }
        caps.deterministic = doc.at("deterministic").get<bool>();
        caps.latent_channels = doc.value("latent_channels", 0);
        caps.downsample_factor = doc.value("downsample_factor", 1);
        caps.name = doc.value("name", std::string("sidecar"));
    } catch (const nlohmann::json::exception& e) {
        throw SidecarError(std::string("malformed sidecar capabilities: ") + e.what());
    }
    if (!caps.deterministic) throw SidecarError("sidecar declares a non-deterministic model");
    if (caps.has(Opcode::loss_grad) && !caps.has(Opcode::encode)) {
        throw SidecarError("sidecar supports loss_grad without encode");
    }
    if (caps.downsample_factor < 1) throw SidecarError("sidecar downsample_factor must be >= 1");
    return caps;
}

SidecarClient::SidecarClient(const std::string& command) {
    // A dead child must surface as an EPIPE error, not kill the engine.
    std::signal(SIGPIPE, SIG_IGN);

    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw SidecarError(std::string("pipe: ") + std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw SidecarError(std::string("pipe: ") + std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

    std::string cmd = command;
    char sh[] = "/bin/sh";
    char dash_c[] = "-c";
    char* argv[] = {sh, dash_c, cmd.data(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    if (rc != 0) {
        pid_ = -1;
        shutdown();
        throw SidecarError("cannot launch sidecar '" + command + "': " + std::strerror(rc));
    }

    try {
        const Message reply = request(Message{protocol::kVersion, Opcode::hello, {}});
        if (reply.blocks.size() != 1 || !std::holds_alternative<std::string>(reply.blocks.front())) {
            throw SidecarError("sidecar hello reply must carry one text block");
        }
        caps_ = parse_capabilities(std::get<std::string>(reply.blocks.front()));
    } catch (...) {
        shutdown();
        throw;
    }
}

SidecarClient::~SidecarClient() { shutdown(); }

void SidecarClient::shutdown() {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_ >= 0) ::close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        // Closing stdin asks the child to exit; give it a moment, then force.
        int status = 0;
        for (int i = 0; i < 100; ++i) {
            if (::waitpid(pid_, &status, WNOHANG) != 0) {
                pid_ = -1;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void SidecarClient::write_all(std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
        const ssize_t n = ::write(to_child_, bytes.data() + done, bytes.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw SidecarError(std::string("write to sidecar failed: ") + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

void SidecarClient::read_exact(std::uint8_t* dst, std::size_t n) {
    std::size_t done = 0;
    while (done < n) {
        const ssize_t got = ::read(from_child_, dst + done, n - done);
        if (got < 0) {
            if (errno == EINTR) continue;
            throw SidecarError(std::string("read from sidecar failed: ") + std::strerror(errno));
        }
        if (got == 0) throw SidecarError("sidecar closed the connection");
        done += static_cast<std::size_t>(got);
    }
}

Message SidecarClient::read_message() {
    std::uint8_t prefix[8];
    read_exact(prefix, sizeof(prefix));
    const std::uint64_t length = protocol::decode_length(std::span<const std::uint8_t, 8>(prefix, 8));
    if (length > protocol::kMaxBodyBytes) throw protocol::ProtocolError("framing", "reply too large");
    std::vector<std::uint8_t> body(static_cast<std::size_t>(length));
    read_exact(body.data(), body.size());
    return protocol::decode_body(body);
}

Message SidecarClient::exchange_raw(std::span<const std::uint8_t> bytes) {
    std::lock_guard lock(mutex_);
    if (to_child_ < 0) throw SidecarError("sidecar is not running");
    write_all(bytes);
    return read_message();
}

Message SidecarClient::request(const Message& message) {
    Message reply = exchange_raw(protocol::encode_message(message));
    if (auto err = protocol::error_info(reply)) throw SidecarRequestError(err->code, err->detail);
    if (reply.opcode != Opcode::result) throw SidecarError("unexpected reply opcode from sidecar");
    return reply;
}

namespace detail {
namespace {

protocol::Tensor frame_tensor(std::span<const float> values, int width, int height) {
    return {{static_cast<std::uint32_t>(height), static_cast<std::uint32_t>(width), 3u},
            std::vector<float>(values.begin(), values.end())};
}

const protocol::Tensor& tensor_block(const Message& m, std::size_t i) {
    if (i >= m.blocks.size() || !std::holds_alternative<protocol::Tensor>(m.blocks[i])) {
        throw SidecarError("sidecar reply is missing tensor block " + std::to_string(i));
    }
    return std::get<protocol::Tensor>(m.blocks[i]);
}

class SidecarEncoder final : public EncoderEndpoint {
  public:
    explicit SidecarEncoder(const std::string& command) : client_(command) {
        if (!client_.capabilities().has(Opcode::encode)) throw SidecarError("sidecar does not support encode");
        if (client_.capabilities().latent_channels < 1) throw SidecarError("sidecar must report latent_channels");
    }

    EncoderKind kind() const override { return EncoderKind::sidecar; }

    LatentShape latent_shape(int width, int height) const override {
        const int f = client_.capabilities().downsample_factor;
        if (width % f != 0 || height % f != 0) {
            throw ConfigError("frame size not divisible by sidecar downsample_factor " + std::to_string(f));
        }
        return {client_.capabilities().latent_channels, height / f, width / f};
    }

    LatentTensor encode(const FrameImage& frame) const override {
        const LatentShape shape = latent_shape(frame.width(), frame.height());
        const Message reply =
            client_.request({protocol::kVersion, Opcode::encode, {frame_tensor(frame.pixels(), frame.width(), frame.height())}});
        const auto& t = tensor_block(reply, 0);
        if (t.data.size() != shape.size()) throw SidecarError("sidecar latent has unexpected size");
        return LatentTensor(shape, t.data);
    }

    LossGradient loss_gradient(const FrameImage& frame, std::span<const float> delta,
                               const LatentTensor& target) const override {
        if (delta.size() != frame.size()) throw ConfigError("perturbation does not match frame size");
        if (target.shape() != latent_shape(frame.width(), frame.height())) {
            throw ConfigError("target latent shape does not match encoder output");
        }
        return request_loss_grad(frame_tensor(frame.pixels(), frame.width(), frame.height()),
                                 frame_tensor(delta, frame.width(), frame.height()), target);
    }

    double evaluate_loss(std::span<const double> input, int width, int height,
                         const LatentTensor& target) const override {
        // The wire carries float32 only.
        std::vector<float> values(input.begin(), input.end());
        std::vector<float> zeros(values.size(), 0.0f);
        return request_loss_grad(frame_tensor(values, width, height), frame_tensor(zeros, width, height), target).loss;
    }

  private:
    LossGradient request_loss_grad(protocol::Tensor frame, protocol::Tensor delta, const LatentTensor& target) const {
        if (!client_.capabilities().has(Opcode::loss_grad)) {
            throw CapabilityError("sidecar does not support loss_grad");
        }
        const auto& s = target.shape();
        protocol::Tensor z{{static_cast<std::uint32_t>(s.channels), static_cast<std::uint32_t>(s.height),
                            static_cast<std::uint32_t>(s.width)},
                           std::vector<float>(target.values().begin(), target.values().end())};
        const std::size_t n = frame.data.size();
        const Message reply =
            client_.request({protocol::kVersion, Opcode::loss_grad, {std::move(frame), std::move(delta), std::move(z)}});
        const auto& loss = tensor_block(reply, 0);
        const auto& grad = tensor_block(reply, 1);
        if (loss.data.size() != 1 || grad.data.size() != n) throw SidecarError("sidecar loss_grad reply has wrong sizes");
        return {static_cast<double>(loss.data[0]), grad.data};
    }

    mutable SidecarClient client_;
};

}  // namespace

std::unique_ptr<EncoderEndpoint> make_sidecar_encoder(const std::string& command) {
    if (command.empty()) throw ConfigError("sidecar encoder needs a command");
    return std::make_unique<SidecarEncoder>(command);
}

}  // namespace detail
}  // namespace uvcg
