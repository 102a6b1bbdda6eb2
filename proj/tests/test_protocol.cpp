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

#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "uvcg/protocol.hpp"
#include "uvcg/random.hpp"

using namespace uvcg;
using namespace uvcg::protocol;

namespace {

std::vector<std::uint8_t> body_of(const std::vector<std::uint8_t>& wire) { return {wire.begin() + 8, wire.end()}; }

std::string error_code_of(const std::vector<std::uint8_t>& body) {
    try {
        (void)decode_body(body);
    } catch (const ProtocolError& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST(Protocol, ExactWireImage) {
    const Message m{kVersion, Opcode::encode, {Tensor{{2}, {1.0f, -2.0f}}}};
    const std::vector<std::uint8_t> wire = encode_message(m);
    const std::vector<std::uint8_t> want = {
        20, 0, 0, 0, 0, 0, 0, 0,     // body length
        'U', 'V', 'C', 'G', 1, 2,    // magic, version, opcode
        0x01, 1, 2, 0, 0, 0,         // dtype, ndim, dims
        0x00, 0x00, 0x80, 0x3f,      // 1.0f
        0x00, 0x00, 0x00, 0xc0,      // -2.0f
    };
    EXPECT_EQ(wire, want);
}

TEST(Protocol, TextBlockWireImage) {
    const Message m{kVersion, Opcode::embed_text, {std::string("hi")}};
    const std::vector<std::uint8_t> want = {14, 0, 0, 0, 0, 0, 0, 0, 'U', 'V', 'C', 'G', 1, 5,
                                            0x10, 1, 2, 0, 0, 0, 'h', 'i'};
    EXPECT_EQ(encode_message(m), want);
}

TEST(Protocol, RoundTripIsBitIdentical) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        Message m;
        m.opcode = static_cast<Opcode>(1 + rng.next() % 7);
        const int blocks = static_cast<int>(rng.next() % 4);
        for (int b = 0; b < blocks; ++b) {
            if (rng.next() % 3 == 0) {
                std::string s(rng.next() % 20, 'a');
                for (char& ch : s) ch = static_cast<char>(rng.next() & 0xff);
                m.blocks.emplace_back(std::move(s));
            } else {
                Tensor t;
                const int ndim = static_cast<int>(rng.next() % 4);
                std::size_t count = 1;
                for (int d = 0; d < ndim; ++d) {
                    t.dims.push_back(static_cast<std::uint32_t>(rng.next() % 5));
                    count *= t.dims.back();
                }
                for (std::size_t i = 0; i < count; ++i) {
                    t.data.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(rng.next())));
                }
                m.blocks.emplace_back(std::move(t));
            }
        }
        const auto wire = encode_message(m);
        const Message back = decode_body(body_of(wire));
        ASSERT_EQ(back.opcode, m.opcode);
        ASSERT_EQ(back.blocks.size(), m.blocks.size());
        // Compare bitwise so NaN payloads count as equal.
        EXPECT_EQ(encode_message(back), wire);
    }
}

TEST(Protocol, ScalarTensorHasRankZero) {
    const Message m{kVersion, Opcode::result, {Tensor{{}, {3.5f}}}};
    const Message back = decode_body(body_of(encode_message(m)));
    EXPECT_EQ(back, m);
    EXPECT_EQ(std::get<Tensor>(back.blocks[0]).element_count(), 1u);
}

TEST(Protocol, LengthPrefix) {
    const std::uint8_t prefix[8] = {0x01, 0x02, 0, 0, 0, 0, 0, 0x80};
    EXPECT_EQ(decode_length(std::span<const std::uint8_t, 8>(prefix, 8)), 0x8000000000000201ULL);
}

TEST(Protocol, MalformedBodies) {
    auto body = body_of(encode_message({kVersion, Opcode::encode, {Tensor{{3}, {1, 2, 3}}}}));

    auto bad = body;
    bad[0] = 'X';
    EXPECT_EQ(error_code_of(bad), "magic");

    bad = body;
    bad[4] = 2;
    EXPECT_EQ(error_code_of(bad), "unsupported_version");

    bad = body;
    bad[5] = 9;
    EXPECT_EQ(error_code_of(bad), "opcode");
    bad[5] = 0;
    EXPECT_EQ(error_code_of(bad), "opcode");

    bad = body;
    bad[6] = 0x02;
    EXPECT_EQ(error_code_of(bad), "dtype");

    for (std::size_t cut = 0; cut < body.size(); ++cut) {
        if (cut == 6) continue;  // header alone is a valid block-less message
        const std::vector<std::uint8_t> truncated(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_FALSE(error_code_of(truncated).empty()) << "cut at " << cut;
    }

    bad = body;
    bad[8] = 0xff;  // dims[0] now far larger than the payload
    EXPECT_EQ(error_code_of(bad), "framing");

    const auto text = body_of(encode_message({kVersion, Opcode::embed_text, {std::string("abc")}}));
    bad = text;
    bad[7] = 2;
    EXPECT_EQ(error_code_of(bad), "framing");
}

TEST(Protocol, HugeDimsDoNotOverflow) {
    std::vector<std::uint8_t> body = {'U', 'V', 'C', 'G', 1, 2, 0x01, 4};
    for (int d = 0; d < 4; ++d) {
        for (int b = 0; b < 4; ++b) body.push_back(0xff);
    }
    EXPECT_EQ(error_code_of(body), "framing");
}

TEST(Protocol, FuzzedBodiesNeverCrash) {
    Rng rng(77);
    const auto base = body_of(encode_message(
        {kVersion, Opcode::loss_grad, {Tensor{{2, 2}, {1, 2, 3, 4}}, std::string("xy"), Tensor{{1}, {0}}}}));
    int rejected = 0;
    for (int trial = 0; trial < 5000; ++trial) {
        auto b = base;
        const int flips = 1 + static_cast<int>(rng.next() % 4);
        for (int f = 0; f < flips; ++f) b[rng.next() % b.size()] = static_cast<std::uint8_t>(rng.next());
        if (rng.next() % 2) b.resize(rng.next() % (b.size() + 1));
        try {
            (void)decode_body(b);
        } catch (const ProtocolError&) {
            ++rejected;
        }
    }
    EXPECT_GT(rejected, 0);
}

TEST(Protocol, ErrorMessages) {
    const Message e = make_error("shape", "bad \"dims\"");
    EXPECT_EQ(e.opcode, Opcode::error);
    const auto info = error_info(decode_body(body_of(encode_message(e))));
    ASSERT_TRUE(info.has_value());
    EXPECT_EQ(info->code, "shape");
    EXPECT_EQ(info->detail, "bad \"dims\"");
    EXPECT_FALSE(error_info(Message{kVersion, Opcode::result, {}}).has_value());
}

TEST(Protocol, EncodeRejectsInconsistentTensor) {
    EXPECT_THROW(encode_message({kVersion, Opcode::encode, {Tensor{{2, 2}, {1, 2, 3}}}}), ProtocolError);
}
