// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/switch_agg.hpp"

#include <algorithm>
#include <string>

#include "netagg/fixed.hpp"

namespace netagg {

SwitchState::SwitchState(size_t slots, int workers, size_t mb, SwitchOptions opts)
    : slots_(slots), workers_(workers), mb_(mb), opts_(opts) {
  if (workers < 1 || workers > kMaxWorkers) {
    throw CapacityError("worker count " + std::to_string(workers) + " outside [1, 32]");
  }
  if (slots < 1 || slots > 65536) throw CapacityError("slot count must be in [1, 65536]");
  if (mb < 1) throw CapacityError("payload length must be positive");
  agg_.assign(slots * mb, 0);
  agg_count_.assign(slots, 0);
  agg_bm_.assign(slots, 0);
  ack_count_.assign(slots, 0);
  ack_bm_.assign(slots, 0);
  clears_.assign(slots, 0);
}

bool SwitchState::validate(const Packet& pkt) const {
  const int idx = single_bit_index(pkt.bm);
  const bool ok = pkt.seq < slots_ && idx >= 0 && idx < workers_ && (!pkt.is_agg || pkt.payload.size() == mb_);
  if (!ok && !opts_.lenient) {
    throw ProtocolViolation("invalid packet at switch: seq=" + std::to_string(pkt.seq) +
                            " bm=" + std::to_string(pkt.bm));
  }
  return ok;
}

std::vector<Outgoing> SwitchState::broadcast(const Packet& pkt) const {
  std::vector<Outgoing> out;
  out.reserve(static_cast<size_t>(workers_));
  for (int w = 0; w < workers_; ++w) out.push_back({w, pkt});
  return out;
}

std::vector<Outgoing> SwitchState::receive(const Packet& pkt) {
  if (!validate(pkt)) return {};
  const size_t seq = pkt.seq;
  const uint32_t bm = pkt.bm;
  const auto w = static_cast<uint32_t>(workers_);

  if (pkt.is_agg) {
    if ((agg_bm_[seq] & bm) == 0 || opts_.mutate_skip_agg_dup_check) {
      ++agg_count_[seq];
      agg_bm_[seq] |= bm;
      int32_t* sum = agg_.data() + seq * mb_;
      for (size_t i = 0; i < mb_; ++i) sum[i] = wrap_add(sum[i], pkt.payload[i]);
      if (agg_count_[seq] == w) {
        ack_count_[seq] = 0;
        ack_bm_[seq] = 0;
      }
    }
    if (agg_count_[seq] == w) {
      Packet fa = pkt;
      fa.payload.assign(agg_.begin() + static_cast<std::ptrdiff_t>(seq * mb_),
                        agg_.begin() + static_cast<std::ptrdiff_t>((seq + 1) * mb_));
      return broadcast(fa);
    }
    return {};
  }

  if ((ack_bm_[seq] & bm) == 0) {
    ++ack_count_[seq];
    ack_bm_[seq] |= bm;
    if (ack_count_[seq] == w) {
      agg_count_[seq] = 0;
      agg_bm_[seq] = 0;
      std::fill_n(agg_.begin() + static_cast<std::ptrdiff_t>(seq * mb_), mb_, 0);
      ++clears_[seq];
    }
  }
  if (ack_count_[seq] == w) {
    Packet confirm = pkt;
    confirm.acked = true;
    return broadcast(confirm);
  }
  return {};
}

}  // namespace netagg
