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

#include "uvcg/protocol.hpp"

#include <bit>
#include <cstring>

#include <nlohmann/json.hpp>

namespace uvcg::protocol {
namespace {

static_assert(std::endian::native == std::endian::little, "wire codec assumes a little-endian host");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <typename T>
    T take() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::span<const std::uint8_t> take_bytes(std::size_t n) {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

  private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw ProtocolError("framing", "message truncated");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::uint8_t> encode_message(const Message& message) {
    std::vector<std::uint8_t> out(8, 0);
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put<std::uint8_t>(out, message.version);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(message.opcode));
    for (const Block& block : message.blocks) {
        if (const auto* t = std::get_if<Tensor>(&block)) {
            if (t->dims.size() > 255) throw ProtocolError("framing", "tensor rank above 255");
            if (t->data.size() != t->element_count()) throw ProtocolError("framing", "tensor data does not match dims");
            put<std::uint8_t>(out, static_cast<std::uint8_t>(DType::float32));
            put<std::uint8_t>(out, static_cast<std::uint8_t>(t->dims.size()));
            for (auto d : t->dims) put<std::uint32_t>(out, d);
            const auto* p = reinterpret_cast<const std::uint8_t*>(t->data.data());
            out.insert(out.end(), p, p + t->data.size() * sizeof(float));
        } else {
            const auto& text = std::get<std::string>(block);
            put<std::uint8_t>(out, static_cast<std::uint8_t>(DType::utf8));
            put<std::uint8_t>(out, 1);
            put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
            out.insert(out.end(), text.begin(), text.end());
        }
    }
    const std::uint64_t body = out.size() - 8;
    std::memcpy(out.data(), &body, 8);
    return out;
}

std::uint64_t decode_length(std::span<const std::uint8_t, 8> prefix) {
    std::uint64_t n;
    std::memcpy(&n, prefix.data(), 8);
    return n;
}

Message decode_body(std::span<const std::uint8_t> body) {
    if (body.size() > kMaxBodyBytes) throw ProtocolError("framing", "message body too large");
    Reader r(body);
    const auto magic = r.take_bytes(4);
    if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) throw ProtocolError("magic", "bad magic");
    Message m;
    m.version = r.take<std::uint8_t>();
    if (m.version != kVersion) {
        throw ProtocolError("unsupported_version", "protocol version " + std::to_string(m.version));
    }
    const auto op = r.take<std::uint8_t>();
    if (op < 1 || op > 7) throw ProtocolError("opcode", "unknown opcode " + std::to_string(op));
    m.opcode = static_cast<Opcode>(op);
    while (!r.done()) {
        const auto dtype = r.take<std::uint8_t>();
        const auto ndim = r.take<std::uint8_t>();
        std::vector<std::uint32_t> dims(ndim);
        for (auto& d : dims) d = r.take<std::uint32_t>();
        if (dtype == static_cast<std::uint8_t>(DType::float32)) {
            Tensor t;
            t.dims = std::move(dims);
            // Overflow-safe element count bounded by the remaining body.
            std::uint64_t count = 1;
            for (auto d : t.dims) {
                count *= d;
                if (count > kMaxBodyBytes) throw ProtocolError("framing", "tensor larger than message");
            }
            const auto bytes = r.take_bytes(static_cast<std::size_t>(count) * sizeof(float));
            t.data.resize(static_cast<std::size_t>(count));
            std::memcpy(t.data.data(), bytes.data(), bytes.size());
            m.blocks.emplace_back(std::move(t));
        } else if (dtype == static_cast<std::uint8_t>(DType::utf8)) {
            if (ndim != 1) throw ProtocolError("framing", "text block must have one dimension");
            const auto bytes = r.take_bytes(dims[0]);
            m.blocks.emplace_back(std::string(bytes.begin(), bytes.end()));
        } else {
            throw ProtocolError("dtype", "unsupported dtype " + std::to_string(dtype));
        }
    }
    return m;
}

Message make_error(const std::string& code, const std::string& detail) {
    const nlohmann::json doc = {{"code", code}, {"message", detail}};
    return Message{kVersion, Opcode::error, {doc.dump()}};
}

std::optional<ErrorInfo> error_info(const Message& message) {
    if (message.opcode != Opcode::error) return std::nullopt;
    ErrorInfo info{"unknown", ""};
    if (!message.blocks.empty()) {
        if (const auto* text = std::get_if<std::string>(&message.blocks.front())) {
            const auto doc = nlohmann::json::parse(*text, nullptr, false);
            if (doc.is_object()) {
                info.code = doc.value("code", info.code);
                info.detail = doc.value("message", std::string());
            } else {
                info.detail = *text;
            }
        }
    }
    return info;
}

}  // namespace uvcg::protocol
