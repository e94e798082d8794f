// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "netagg/fixed.hpp"
#include "netagg/wire.hpp"

namespace netagg {
namespace {

TEST(Wire, GoldenAggregationPacket) {
  Packet p{true, false, 5, 0x4, {1}};
  const std::vector<uint8_t> want = {0x01, 0x00, 0x05, 0x00, 0x04, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00};
  EXPECT_EQ(encode_packet(p), want);
  EXPECT_EQ(decode_packet(want, 1), p);
}

TEST(Wire, GoldenAckPacket) {
  Packet p{false, false, 0, 0x1, {0}};
  const std::vector<uint8_t> want = {0x00, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00};
  EXPECT_EQ(encode_packet(p), want);
}

TEST(Wire, NegativePayloadIsTwosComplementLittleEndian) {
  Packet p{true, true, 0x0102, 0x80000000u, {-2}};
  const std::vector<uint8_t> want = {0x03, 0x00, 0x02, 0x01, 0x00, 0x00, 0x00, 0x80, 0xFE, 0xFF, 0xFF, 0xFF};
  EXPECT_EQ(encode_packet(p), want);
}

TEST(Wire, RoundTripRandomPackets) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const size_t mb = 1 + rng() % 16;
    Packet p;
    p.is_agg = rng() & 1;
    p.acked = rng() & 1;
    p.seq = static_cast<uint16_t>(rng());
    p.bm = uint32_t{1} << (rng() % 32);
    for (size_t k = 0; k < mb; ++k) p.payload.push_back(static_cast<int32_t>(rng()));
    const auto bytes = encode_packet(p);
    ASSERT_EQ(bytes.size(), packet_size(mb));
    ASSERT_EQ(decode_packet(bytes, mb), p);
  }
}

TEST(Wire, DecodeRejectsMalformed) {
  std::vector<uint8_t> seven(7, 0);
  EXPECT_THROW(decode_packet(seven, 1), MalformedPacket);
  std::vector<uint8_t> bytes(12, 0);
  bytes[0] = 0x04;
  EXPECT_THROW(decode_packet(bytes, 1), MalformedPacket);
  bytes[0] = 0;
  bytes[1] = 1;
  EXPECT_THROW(decode_packet(bytes, 1), MalformedPacket);
}

TEST(Wire, SingleBitIndex) {
  EXPECT_EQ(single_bit_index(1), 0);
  EXPECT_EQ(single_bit_index(0x80000000u), 31);
  EXPECT_EQ(single_bit_index(0), -1);
  EXPECT_EQ(single_bit_index(3), -1);
}

TEST(Fixed, FromRealExamples) {
  EXPECT_EQ(fx_from_real(1.0).raw, 65536);
  EXPECT_EQ(fx_from_real(-0.5).raw, -32768);
  EXPECT_EQ(fx_from_real(0.1).raw, 6554);
  // ties away from zero
  EXPECT_EQ(fx_from_real(0.5 / 65536).raw, 1);
  EXPECT_EQ(fx_from_real(-0.5 / 65536).raw, -1);
  EXPECT_THROW(fx_from_real(32768.0), OverflowError);
  EXPECT_THROW(fx_from_real(-32768.0), OverflowError);
  EXPECT_THROW(fx_from_real(NAN), OverflowError);
}

TEST(Fixed, RoundTripWithinHalfUlp) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-32767.0, 32767.0);
  for (int i = 0; i < 10000; ++i) {
    const double r = u(rng);
    ASSERT_LE(std::abs(fx_to_real(fx_from_real(r)) - r), std::ldexp(1.0, -17));
  }
}

TEST(Fixed, WrappingAddIsAssociativeAndCommutative) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10000; ++i) {
    FixedQ16 a{static_cast<int32_t>(rng())}, b{static_cast<int32_t>(rng())}, c{static_cast<int32_t>(rng())};
    ASSERT_EQ((a + b) + c, a + (b + c));
    ASSERT_EQ(a + b, b + a);
  }
  EXPECT_EQ((FixedQ16{INT32_MAX} + FixedQ16{1}).raw, INT32_MIN);
}

TEST(Fixed, MultiplyFloors) {
  EXPECT_EQ((FixedQ16{65536} * FixedQ16{65536}).raw, 65536);
  EXPECT_EQ((FixedQ16{-1} * FixedQ16{1}).raw, -1);  // -2^-32 floors to -2^-16
  EXPECT_EQ((FixedQ16{1} * FixedQ16{1}).raw, 0);
  EXPECT_EQ(truncate_bits(0b11010110, 3), 0b11000000);
  EXPECT_EQ(feature_mul(192, 65536), 49152);
  EXPECT_EQ(feature_mul(1, -1), -1);
}

}  // namespace
}  // namespace netagg
