// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/worker_proto.hpp"

#include <string>

#include "netagg/switch_agg.hpp"

namespace netagg {

WorkerProtoState::WorkerProtoState(size_t slots, int workers, int my_index, size_t mb, TimeNs timeout_ns)
    : workers_(workers), my_index_(my_index), mb_(mb), timeout_ns_(timeout_ns) {
  if (workers < 1 || workers > kMaxWorkers) throw CapacityError("worker count outside [1, 32]");
  if (my_index < 0 || my_index >= workers) throw CapacityError("worker index out of range");
  if (slots < 1 || slots > 65536) throw CapacityError("slot count must be in [1, 65536]");
  if (timeout_ns <= 0) throw CapacityError("retransmission timeout must be positive");
  bm_ = 1u << my_index;
  unused_.assign(slots, true);
  inflight_.resize(slots);
}

TimerArm WorkerProtoState::arm(uint16_t slot, TimeNs now) {
  inflight_[slot].timer_generation = next_generation_++;
  return {slot, now + timeout_ns_, inflight_[slot].timer_generation};
}

std::optional<WorkerAction> WorkerProtoState::send_pa(std::span<const int32_t> pa, TimeNs now) {
  if (pa.size() != mb_) throw CapacityError("PA length does not match the session payload length");
  const uint16_t slot = seq_;
  if (!unused_[slot]) return std::nullopt;

  unused_[slot] = false;
  Packet pkt;
  pkt.is_agg = true;
  pkt.seq = slot;
  pkt.bm = bm_;
  pkt.payload.assign(pa.begin(), pa.end());
  seq_ = static_cast<uint16_t>((static_cast<size_t>(seq_) + 1) % unused_.size());

  Inflight& entry = inflight_[slot];
  entry.last_sent = pkt;
  entry.phase = SlotPhase::kAwaitingFa;
  entry.active = true;

  WorkerAction act;
  act.send = std::move(pkt);
  act.arm = arm(slot, now);
  return act;
}

WorkerAction WorkerProtoState::receive(const Packet& pkt, TimeNs now) {
  WorkerAction act;
  if (pkt.seq >= unused_.size()) return act;
  Inflight& entry = inflight_[pkt.seq];
  if (!entry.active) return act;

  if (pkt.is_agg) {
    if (entry.phase == SlotPhase::kAwaitingFa) {
      act.fa = pkt.payload;
      Packet ack;
      ack.is_agg = false;
      ack.seq = pkt.seq;
      ack.bm = bm_;
      ack.payload.assign(mb_, 0);
      entry.last_sent = std::move(ack);
      entry.phase = SlotPhase::kAwaitingConfirm;
    }
    // A duplicate FA while awaiting confirmation re-emits the ack only.
    act.send = entry.last_sent;
    act.arm = arm(pkt.seq, now);
    return act;
  }

  // Confirmations only count once this worker has acked the round; a
  // re-broadcast confirmation of an earlier round must not free a reused slot.
  if (entry.phase != SlotPhase::kAwaitingConfirm) return act;
  unused_[pkt.seq] = true;
  entry = Inflight{};
  act.slot_freed = true;
  return act;
}

WorkerAction WorkerProtoState::on_timeout(uint16_t slot, TimeNs now) {
  if (slot >= unused_.size() || !inflight_[slot].active) {
    throw ConsistencyError("timeout for slot " + std::to_string(slot) + " with no inflight entry");
  }
  WorkerAction act;
  act.send = inflight_[slot].last_sent;
  act.arm = arm(slot, now);
  return act;
}

bool WorkerProtoState::timer_live(uint16_t slot, uint64_t generation) const {
  return slot < inflight_.size() && inflight_[slot].active && inflight_[slot].timer_generation == generation;
}

std::optional<SlotPhase> WorkerProtoState::phase(size_t slot) const {
  if (!inflight_[slot].active) return std::nullopt;
  return inflight_[slot].phase;
}

size_t WorkerProtoState::inflight_count() const {
  size_t n = 0;
  for (const auto& e : inflight_) n += e.active ? 1 : 0;
  return n;
}

std::vector<uint16_t> WorkerProtoState::inflight_slots() const {
  std::vector<uint16_t> out;
  for (size_t i = 0; i < inflight_.size(); ++i) {
    if (inflight_[i].active) out.push_back(static_cast<uint16_t>(i));
  }
  return out;
}

}  // namespace netagg
