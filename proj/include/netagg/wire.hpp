// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace netagg {

class MalformedPacket : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One aggregation/acknowledgement packet. `payload` is PA on worker->switch
// aggregation packets and FA on switch->worker broadcasts; it is carried but
// ignored on ack and confirmation packets.
struct Packet {
  bool is_agg = false;
  bool acked = false;
  uint16_t seq = 0;
  uint32_t bm = 0;
  std::vector<int32_t> payload;

  bool operator==(const Packet&) const = default;
};

// Wire layout (little-endian):
//   byte 0    flags: bit0 is_agg, bit1 acked, bits 2..7 zero
//   byte 1    reserved, zero
//   bytes 2-3 seq
//   bytes 4-7 bm
//   then payload.size() signed 32-bit words
constexpr size_t kHeaderBytes = 8;

constexpr size_t packet_size(size_t mb) { return kHeaderBytes + 4 * mb; }

std::vector<uint8_t> encode_packet(const Packet& pkt);
Packet decode_packet(std::span<const uint8_t> bytes, size_t mb);

// Index of the single set bit of a worker-originated bitmap, or -1 if the
// bitmap does not have exactly one bit set.
int single_bit_index(uint32_t bm);

}  // namespace netagg
