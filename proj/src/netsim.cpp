// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/netsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>

#include "netagg/fixed.hpp"

namespace netagg {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

const char* kind_name(TraceKind k) {
  switch (k) {
    case TraceKind::kSend: return "send";
    case TraceKind::kDeliver: return "deliver";
    case TraceKind::kDrop: return "drop";
    case TraceKind::kDup: return "dup";
    case TraceKind::kTimeout: return "timeout";
    case TraceKind::kFa: return "fa";
    case TraceKind::kFreed: return "freed";
  }
  return "?";
}

const char* packet_name(PacketKind k) {
  switch (k) {
    case PacketKind::kPa: return "pa";
    case PacketKind::kAck: return "ack";
    case PacketKind::kFa: return "fa";
    case PacketKind::kConfirm: return "confirm";
  }
  return "?";
}

}  // namespace

std::string node_name(int node, int workers) {
  if (node < workers) return "w" + std::to_string(node);
  if (node == workers) return "switch";
  return "host";
}

void write_trace_csv(const Trace& trace, std::ostream& os) {
  os << "time_ns,event_kind,node,slot,detail\n";
  for (const auto& e : trace.events) {
    os << e.time << ',' << kind_name(e.kind) << ',' << node_name(e.node, trace.workers) << ',' << e.slot << ',';
    os << "pkt=" << packet_name(e.pkt) << " round=" << e.round;
    if (e.peer >= 0) os << " peer=" << node_name(e.peer, trace.workers);
    if (e.retransmit) os << " retx=1";
    os << '\n';
  }
}

LatencyStats measure_allreduce_latency(const Trace& trace) {
  struct Round {
    std::optional<TimeNs> first_send;
    std::vector<TimeNs> first_fa;
    size_t got = 0;
  };
  std::map<uint64_t, Round> rounds;
  const auto w = static_cast<size_t>(trace.workers);
  for (const auto& e : trace.events) {
    if (e.kind == TraceKind::kSend && e.pkt == PacketKind::kPa && e.node < trace.workers && !e.retransmit) {
      auto& r = rounds[e.round];
      if (!r.first_send || e.time < *r.first_send) r.first_send = e.time;
    } else if (e.kind == TraceKind::kFa) {
      auto& r = rounds[e.round];
      if (r.first_fa.empty()) r.first_fa.assign(w, -1);
      auto& slot = r.first_fa[static_cast<size_t>(e.node)];
      if (slot < 0) {
        slot = e.time;
        ++r.got;
      }
    }
  }

  LatencyStats stats;
  for (const auto& [tag, r] : rounds) {
    if (!r.first_send || r.got != w) {
      ++stats.incomplete;
      continue;
    }
    const TimeNs last = *std::max_element(r.first_fa.begin(), r.first_fa.end());
    stats.per_round.push_back(last - *r.first_send);
  }
  stats.complete = stats.per_round.size();
  if (stats.complete > 0) {
    std::vector<TimeNs> sorted = stats.per_round;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    stats.min = sorted.front();
    stats.max = sorted.back();
    stats.median = sorted[(n - 1) / 2];
    const auto rank = static_cast<size_t>(std::ceil(0.99 * static_cast<double>(n)));
    stats.p99 = sorted[std::max<size_t>(rank, 1) - 1];
  }
  return stats;
}

Cluster::Cluster(NetConfig cfg)
    : cfg_(cfg), rng_(cfg.fault.seed), switch_(cfg.slots, cfg.workers, cfg.mb, cfg.switch_options) {
  if (cfg_.fault.drop_prob < 0 || cfg_.fault.drop_prob > 1 || cfg_.fault.dup_prob < 0 || cfg_.fault.dup_prob > 1) {
    throw CapacityError("fault probabilities must lie in [0, 1]");
  }
  if (cfg_.fault.latency_ns < 0 || cfg_.fault.jitter_ns < 0) throw CapacityError("negative link delay");
  if (cfg_.timeout_ns == 0) cfg_.timeout_ns = 4 * std::max<TimeNs>(cfg_.fault.latency_ns, 1);
  workers_.reserve(static_cast<size_t>(cfg_.workers));
  for (int w = 0; w < cfg_.workers; ++w) workers_.emplace_back(cfg_.slots, cfg_.workers, w, cfg_.mb, cfg_.timeout_ns);
  worker_round_.assign(static_cast<size_t>(cfg_.workers), std::vector<uint64_t>(cfg_.slots, 0));
  slot_round_.assign(cfg_.slots, 0);
  const auto nodes = static_cast<size_t>(cfg_.workers + 2);
  link_last_arrival_.assign(nodes * nodes, 0);
  uplink_free_.assign(static_cast<size_t>(cfg_.workers), 0);
  trace_.workers = cfg_.workers;
}

size_t Cluster::link_index(int from, int to) const {
  return static_cast<size_t>(from) * static_cast<size_t>(cfg_.workers + 2) + static_cast<size_t>(to);
}

void Cluster::push(TimeNs at, std::variant<Deliver, Timer, Callback> body) {
  queue_.push(Event{at, order_++, std::move(body)});
}

void Cluster::schedule(TimeNs at, std::function<void()> fn) { push(std::max(at, now_), Callback{std::move(fn)}); }

void Cluster::record(TraceEvent ev) {
  if (tracing_) trace_.events.push_back(ev);
}

double Cluster::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

TimeNs Cluster::jitter() {
  if (cfg_.fault.jitter_ns == 0) return 0;
  return static_cast<TimeNs>(rng_() % static_cast<uint64_t>(cfg_.fault.jitter_ns + 1));
}

PacketKind Cluster::classify(const Packet& pkt, bool from_aggregator) {
  if (from_aggregator) return pkt.is_agg ? PacketKind::kFa : PacketKind::kConfirm;
  return pkt.is_agg ? PacketKind::kPa : PacketKind::kAck;
}

void Cluster::transmit(int from, int to, Message msg, TimeNs depart) {
  const PacketKind pk = classify(msg.pkt, msg.final_dest < cfg_.workers);
  ++counters_.packets_sent;
  counters_.bytes_sent += packet_size(msg.pkt.payload.size());
  record({depart, TraceKind::kSend, from, to, msg.pkt.seq, pk, msg.retransmit, msg.round});
  if (pk == PacketKind::kPa && from < cfg_.workers && !msg.retransmit) {
    auto [it, fresh] = open_rounds_.try_emplace(msg.round, RoundTrack{depart, 0});
    if (!fresh) it->second.first_send = std::min(it->second.first_send, depart);
  }

  if (cfg_.fault.drop_prob > 0 && uniform() < cfg_.fault.drop_prob) {
    ++counters_.drops;
    record({depart, TraceKind::kDrop, from, to, msg.pkt.seq, pk, msg.retransmit, msg.round});
    return;
  }

  TimeNs on_wire = depart;
  if (from < cfg_.workers && cfg_.uplink_elems_per_ns > 0) {
    auto& free_at = uplink_free_[static_cast<size_t>(from)];
    const auto ser = static_cast<TimeNs>(std::llround(static_cast<double>(msg.pkt.payload.size()) / cfg_.uplink_elems_per_ns));
    on_wire = std::max(depart, free_at) + ser;
    free_at = on_wire;
  }

  TimeNs& last = link_last_arrival_[link_index(from, to)];
  TimeNs arrival = on_wire + cfg_.fault.latency_ns + jitter();
  if (cfg_.fault.fifo_links) arrival = std::max(arrival, last);
  last = std::max(last, arrival);

  const bool duplicate = cfg_.fault.dup_prob > 0 && uniform() < cfg_.fault.dup_prob;
  if (duplicate) {
    TimeNs dup_arrival = on_wire + cfg_.fault.latency_ns + jitter();
    if (cfg_.fault.fifo_links) dup_arrival = std::max(dup_arrival, last);
    last = std::max(last, dup_arrival);
    ++counters_.dups;
    record({depart, TraceKind::kDup, from, to, msg.pkt.seq, pk, msg.retransmit, msg.round});
    push(arrival, Deliver{to, from, msg});
    push(dup_arrival, Deliver{to, from, std::move(msg)});
    return;
  }
  push(arrival, Deliver{to, from, std::move(msg)});
}

std::optional<uint16_t> Cluster::submit(int worker, std::span<const int32_t> pa, uint64_t round) {
  auto& st = workers_[static_cast<size_t>(worker)];
  const uint16_t slot = st.cursor();
  auto act = st.send_pa(pa, now_);
  if (!act) return std::nullopt;
  worker_round_[static_cast<size_t>(worker)][slot] = round;
  apply_worker_action(worker, std::move(*act), false);
  return slot;
}

void Cluster::apply_worker_action(int w, WorkerAction act, bool retransmit) {
  const auto wi = static_cast<size_t>(w);
  if (act.arm) push(act.arm->deadline, Timer{w, act.arm->slot, act.arm->generation});
  if (act.send) {
    const uint16_t slot = act.send->seq;
    Message msg{std::move(*act.send), aggregator_node(), worker_round_[wi][slot], retransmit};
    if (retransmit) ++counters_.retransmissions;
    transmit(w, switch_node(), std::move(msg), now_);
  }
}

void Cluster::aggregate_at(int node, Message msg) {
  const uint16_t seq = msg.pkt.seq;
  const bool was_agg = msg.pkt.is_agg;
  const uint32_t before = seq < cfg_.slots ? switch_.agg_count(seq) : 0;
  std::vector<Outgoing> out = switch_.receive(msg.pkt);
  if (was_agg && seq < cfg_.slots && switch_.agg_count(seq) != before) {
    if (before == 0) {
      slot_round_[seq] = msg.round;
    } else if (slot_round_[seq] != msg.round) {
      ++mixed_rounds_;
    }
  }
  const TimeNs proc = node == switch_node() ? cfg_.switch_proc_ns : cfg_.host_proc_ns;
  for (auto& o : out) {
    Message reply{std::move(o.pkt), o.dest, seq < cfg_.slots ? slot_round_[seq] : 0, false};
    const int next_hop = node == switch_node() ? o.dest : switch_node();
    transmit(node, next_hop, std::move(reply), now_ + proc);
  }
}

void Cluster::handle(Deliver& d) {
  ++counters_.deliveries;
  const PacketKind pk = classify(d.msg.pkt, d.msg.final_dest < cfg_.workers);
  record({now_, TraceKind::kDeliver, d.node, d.from, d.msg.pkt.seq, pk, d.msg.retransmit, d.msg.round});

  if (d.node == aggregator_node()) {
    aggregate_at(d.node, std::move(d.msg));
    return;
  }
  if (d.node == switch_node()) {
    // Endhost topology: the switch only forwards.
    const int next_hop = d.msg.final_dest < cfg_.workers ? d.msg.final_dest : host_node();
    transmit(d.node, next_hop, std::move(d.msg), now_ + cfg_.switch_proc_ns);
    return;
  }

  const int w = d.node;
  const auto wi = static_cast<size_t>(w);
  const uint16_t slot = d.msg.pkt.seq;
  auto act = workers_[wi].receive(d.msg.pkt, now_);
  const uint64_t round = slot < cfg_.slots ? worker_round_[wi][slot] : 0;
  std::optional<std::vector<int32_t>> fa = std::move(act.fa);
  const bool freed = act.slot_freed;
  act.fa.reset();
  apply_worker_action(w, std::move(act), false);
  if (fa) {
    record({now_, TraceKind::kFa, w, -1, slot, PacketKind::kFa, false, round});
    if (auto it = open_rounds_.find(round); it != open_rounds_.end()) {
      it->second.delivered |= 1u << w;
      if (std::popcount(it->second.delivered) == cfg_.workers) {
        latencies_.push_back({round, now_ - it->second.first_send});
        open_rounds_.erase(it);
      }
    }
    if (fa_hook_) fa_hook_(w, slot, round, *fa);
  }
  if (freed) {
    record({now_, TraceKind::kFreed, w, -1, slot, PacketKind::kConfirm, false, round});
    if (freed_hook_) freed_hook_(w, slot);
  }
}

void Cluster::handle(const Timer& t) {
  auto& st = workers_[static_cast<size_t>(t.worker)];
  if (!st.timer_live(t.slot, t.generation)) return;  // canceled or re-armed
  const uint64_t round = worker_round_[static_cast<size_t>(t.worker)][t.slot];
  const auto phase = st.phase(t.slot);
  const PacketKind pk = phase == SlotPhase::kAwaitingFa ? PacketKind::kPa : PacketKind::kAck;
  record({now_, TraceKind::kTimeout, t.worker, -1, t.slot, pk, true, round});
  apply_worker_action(t.worker, st.on_timeout(t.slot, now_), true);
}

bool Cluster::run_until(const std::function<bool()>& done, TimeNs horizon) {
  while (!done()) {
    if (queue_.empty()) return false;
    if (queue_.top().time > horizon) return false;
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.time;
    if (auto* d = std::get_if<Deliver>(&ev.body)) {
      handle(*d);
    } else if (auto* t = std::get_if<Timer>(&ev.body)) {
      handle(*t);
    } else {
      std::get<Callback>(ev.body).fn();
    }
  }
  return true;
}

std::vector<StuckSlot> Cluster::stuck_slots() const {
  std::vector<StuckSlot> out;
  for (int w = 0; w < cfg_.workers; ++w) {
    const auto& st = workers_[static_cast<size_t>(w)];
    for (uint16_t s : st.inflight_slots()) out.push_back({w, s, *st.phase(s)});
  }
  return out;
}

bool Cluster::any_inflight() const {
  return std::any_of(workers_.begin(), workers_.end(), [](const auto& st) { return st.inflight_count() > 0; });
}

std::vector<int32_t> workload_pa(const Workload& wl, size_t round, int worker, size_t mb) {
  std::vector<int32_t> pa(mb);
  uint64_t state = splitmix64(wl.seed ^ splitmix64(round * 0x100000001B3ull + static_cast<uint64_t>(worker)));
  for (size_t i = 0; i < mb; ++i) {
    state = splitmix64(state + i);
    pa[i] = static_cast<int32_t>(static_cast<uint32_t>(state));
  }
  return pa;
}

RunResult run(const NetConfig& cfg, const Workload& workload, TimeNs horizon) {
  Cluster cluster(cfg);
  const auto w_count = static_cast<size_t>(cfg.workers);
  std::vector<size_t> next_round(w_count, 0);
  std::vector<uint8_t> delivered(workload.rounds * w_count, 0);
  std::vector<std::vector<int32_t>> expected(workload.rounds);
  RunResult result;

  auto expected_fa = [&](size_t round) -> const std::vector<int32_t>& {
    auto& e = expected[round];
    if (e.empty()) {
      e.assign(cfg.mb, 0);
      for (int w = 0; w < cfg.workers; ++w) {
        const auto pa = workload_pa(workload, round, w, cfg.mb);
        for (size_t i = 0; i < cfg.mb; ++i) e[i] = wrap_add(e[i], pa[i]);
      }
    }
    return e;
  };

  auto try_submit = [&](int w) {
    auto& next = next_round[static_cast<size_t>(w)];
    while (next < workload.rounds) {
      const auto pa = workload_pa(workload, next, w, cfg.mb);
      if (!cluster.submit(w, pa, next)) break;
      ++next;
    }
  };

  cluster.on_fa([&](int w, uint16_t, uint64_t round, const std::vector<int32_t>& fa) {
    if (round >= workload.rounds) {
      ++result.fa_mismatches;
      return;
    }
    auto& flag = delivered[round * w_count + static_cast<size_t>(w)];
    if (flag) ++result.duplicate_deliveries;
    flag = 1;
    if (fa != expected_fa(round)) ++result.fa_mismatches;
  });
  cluster.on_freed([&](int w, uint16_t) { try_submit(w); });

  for (int w = 0; w < cfg.workers; ++w) try_submit(w);

  auto done = [&] {
    // Stop at the first violation; the trace up to here is the witness.
    if (result.fa_mismatches || result.duplicate_deliveries || cluster.mixed_round_events()) return true;
    for (size_t n : next_round) {
      if (n < workload.rounds) return false;
    }
    return !cluster.any_inflight();
  };
  result.live = cluster.run_until(done, horizon);
  if (!result.live) result.stuck = cluster.stuck_slots();
  const bool violated = result.fa_mismatches || result.duplicate_deliveries || cluster.mixed_round_events();
  // Deliver stray duplicates still on the wire.
  if (result.live && !violated) cluster.run_until([] { return false; }, horizon);

  for (size_t r = 0; r < workload.rounds; ++r) {
    bool all = true;
    for (size_t w = 0; w < w_count; ++w) all = all && delivered[r * w_count + w] != 0;
    result.rounds_completed += all ? 1 : 0;
  }
  result.mixed_round_events = cluster.mixed_round_events();
  result.counters = cluster.counters();
  result.end_time = cluster.now();
  result.trace = cluster.trace();
  return result;
}

}  // namespace netagg
