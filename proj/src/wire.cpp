// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/wire.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "netagg/fixed.hpp"

namespace netagg {

namespace {

constexpr uint8_t kFlagAgg = 0x1;
constexpr uint8_t kFlagAcked = 0x2;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(std::span<const uint8_t> b, size_t off) {
  return static_cast<uint32_t>(b[off]) | (static_cast<uint32_t>(b[off + 1]) << 8) |
         (static_cast<uint32_t>(b[off + 2]) << 16) | (static_cast<uint32_t>(b[off + 3]) << 24);
}

}  // namespace

std::vector<uint8_t> encode_packet(const Packet& pkt) {
  std::vector<uint8_t> out;
  out.reserve(packet_size(pkt.payload.size()));
  uint8_t flags = 0;
  if (pkt.is_agg) flags |= kFlagAgg;
  if (pkt.acked) flags |= kFlagAcked;
  out.push_back(flags);
  out.push_back(0);
  put_u16(out, pkt.seq);
  put_u32(out, pkt.bm);
  for (int32_t w : pkt.payload) put_u32(out, static_cast<uint32_t>(w));
  return out;
}

Packet decode_packet(std::span<const uint8_t> bytes, size_t mb) {
  if (bytes.size() != packet_size(mb)) {
    throw MalformedPacket("packet length " + std::to_string(bytes.size()) + ", expected " +
                          std::to_string(packet_size(mb)));
  }
  const uint8_t flags = bytes[0];
  if ((flags & ~(kFlagAgg | kFlagAcked)) != 0) throw MalformedPacket("reserved flag bits set");
  if (bytes[1] != 0) throw MalformedPacket("reserved byte nonzero");

  Packet pkt;
  pkt.is_agg = (flags & kFlagAgg) != 0;
  pkt.acked = (flags & kFlagAcked) != 0;
  pkt.seq = static_cast<uint16_t>(bytes[2] | (bytes[3] << 8));
  pkt.bm = get_u32(bytes, 4);
  pkt.payload.resize(mb);
  for (size_t i = 0; i < mb; ++i) pkt.payload[i] = static_cast<int32_t>(get_u32(bytes, kHeaderBytes + 4 * i));
  return pkt;
}

int single_bit_index(uint32_t bm) {
  if (std::popcount(bm) != 1) return -1;
  return std::countr_zero(bm);
}

FixedQ16 fx_from_real(double r) {
  if (!std::isfinite(r) || std::fabs(r) >= 32768.0) {
    throw OverflowError("value out of Q16.16 range: " + std::to_string(r));
  }
  // std::round rounds half away from zero.
  const double scaled = std::round(r * static_cast<double>(FixedQ16::kOne));
  if (scaled > 2147483647.0 || scaled < -2147483648.0) throw OverflowError("value out of Q16.16 range");
  return FixedQ16{static_cast<int32_t>(scaled)};
}

double fx_to_real(FixedQ16 f) { return static_cast<double>(f.raw) / static_cast<double>(FixedQ16::kOne); }

}  // namespace netagg
