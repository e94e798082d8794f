// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "netagg/wire.hpp"

namespace netagg {

using TimeNs = int64_t;

class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class SlotPhase : uint8_t { kAwaitingFa, kAwaitingConfirm };

struct TimerArm {
  uint16_t slot = 0;
  TimeNs deadline = 0;
  uint64_t generation = 0;
};

// Everything a worker wants done after handling one input.
struct WorkerAction {
  std::optional<Packet> send;                 // to the switch
  std::optional<std::vector<int32_t>> fa;     // full activation for the trainer
  std::optional<TimerArm> arm;
  bool slot_freed = false;
};

// Worker-side aggregation protocol for one worker: slot-gated PA sends, FA
// receipt with acknowledgement, confirmation-gated slot reuse and fixed-timeout
// retransmission.
class WorkerProtoState {
 public:
  WorkerProtoState(size_t slots, int workers, int my_index, size_t mb, TimeNs timeout_ns);

  // Returns std::nullopt action (busy) when the next slot is still in flight.
  std::optional<WorkerAction> send_pa(std::span<const int32_t> pa, TimeNs now);
  WorkerAction receive(const Packet& pkt, TimeNs now);
  // Throws ConsistencyError if `slot` has no inflight entry.
  WorkerAction on_timeout(uint16_t slot, TimeNs now);

  // True when `generation` is the live timer of `slot`.
  bool timer_live(uint16_t slot, uint64_t generation) const;

  size_t slots() const { return unused_.size(); }
  int index() const { return my_index_; }
  uint32_t bitmap() const { return bm_; }
  uint16_t cursor() const { return seq_; }
  bool unused(size_t slot) const { return unused_[slot]; }
  std::optional<SlotPhase> phase(size_t slot) const;
  size_t inflight_count() const;
  std::vector<uint16_t> inflight_slots() const;

 private:
  struct Inflight {
    Packet last_sent;
    SlotPhase phase = SlotPhase::kAwaitingFa;
    uint64_t timer_generation = 0;
    bool active = false;
  };

  TimerArm arm(uint16_t slot, TimeNs now);

  int workers_;
  int my_index_;
  size_t mb_;
  TimeNs timeout_ns_;
  uint32_t bm_;
  uint16_t seq_ = 0;
  uint64_t next_generation_ = 1;
  std::vector<bool> unused_;
  std::vector<Inflight> inflight_;
};

}  // namespace netagg
