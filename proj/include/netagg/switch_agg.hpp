// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "netagg/wire.hpp"

namespace netagg {

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr int kMaxWorkers = 32;

struct SwitchOptions {
  // Invalid packets are dropped instead of raising ProtocolViolation.
  bool lenient = false;
  // Test-only fault injection: skip the aggregation-bitmap duplicate check so
  // retransmitted PAs are summed twice. Used to self-test the fuzz checker.
  bool mutate_skip_agg_dup_check = false;
};

struct Outgoing {
  int dest = 0;  // worker index
  Packet pkt;
};

// Switch data plane: N aggregation slots, each holding a running sum, a
// received-worker bitmap, and the acknowledgement round that gates clearing.
class SwitchState {
 public:
  SwitchState(size_t slots, int workers, size_t mb, SwitchOptions opts = {});

  // Processes one packet; returns the packets to emit (W copies for a broadcast).
  std::vector<Outgoing> receive(const Packet& pkt);

  size_t slots() const { return slots_; }
  int workers() const { return workers_; }
  size_t mb() const { return mb_; }

  std::span<const int32_t> agg(size_t seq) const { return {agg_.data() + seq * mb_, mb_}; }
  uint32_t agg_count(size_t seq) const { return agg_count_[seq]; }
  uint32_t agg_bm(size_t seq) const { return agg_bm_[seq]; }
  uint32_t ack_count(size_t seq) const { return ack_count_[seq]; }
  uint32_t ack_bm(size_t seq) const { return ack_bm_[seq]; }

  // Number of times slot `seq` had its aggregation registers cleared.
  uint64_t clear_count(size_t seq) const { return clears_[seq]; }

 private:
  std::vector<Outgoing> broadcast(const Packet& pkt) const;
  bool validate(const Packet& pkt) const;

  size_t slots_;
  int workers_;
  size_t mb_;
  SwitchOptions opts_;

  std::vector<int32_t> agg_;  // slots_ x mb_
  std::vector<uint32_t> agg_count_;
  std::vector<uint32_t> agg_bm_;
  std::vector<uint32_t> ack_count_;
  std::vector<uint32_t> ack_bm_;
  std::vector<uint64_t> clears_;
};

}  // namespace netagg
