// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "netagg/switch_agg.hpp"
#include "netagg/wire.hpp"
#include "netagg/worker_proto.hpp"

namespace netagg {

struct FaultModel {
  double drop_prob = 0.0;  // per transmission
  double dup_prob = 0.0;   // per delivered transmission
  TimeNs latency_ns = 500;  // one-way, per hop
  TimeNs jitter_ns = 0;     // uniform additive delay in [0, jitter_ns]
  uint64_t seed = 1;
  // Packets on one directed link are never reordered; jitter still reorders
  // traffic across links.
  bool fifo_links = true;
};

enum class Topology : uint8_t { kInSwitch, kEndhostServer };

struct NetConfig {
  int workers = 8;
  size_t slots = 16;
  size_t mb = 8;
  Topology topology = Topology::kInSwitch;
  TimeNs switch_proc_ns = 100;
  TimeNs host_proc_ns = 2000;
  TimeNs timeout_ns = 0;             // 0 selects 4 x latency
  double uplink_elems_per_ns = 0.0;  // worker uplink serialization; 0 disables
  SwitchOptions switch_options;
  FaultModel fault;
};

enum class TraceKind : uint8_t { kSend, kDeliver, kDrop, kDup, kTimeout, kFa, kFreed };

enum class PacketKind : uint8_t { kPa, kAck, kFa, kConfirm };

struct TraceEvent {
  TimeNs time = 0;
  TraceKind kind = TraceKind::kSend;
  int node = 0;   // acting node
  int peer = -1;  // other endpoint for link events
  uint16_t slot = 0;
  PacketKind pkt = PacketKind::kPa;
  bool retransmit = false;
  uint64_t round = 0;  // out-of-band round tag, never on the wire

  bool operator==(const TraceEvent&) const = default;
};

struct Trace {
  int workers = 0;
  std::vector<TraceEvent> events;

  bool operator==(const Trace&) const = default;
};

// Node numbering: workers 0..W-1, switch W, endhost server W+1.
std::string node_name(int node, int workers);
void write_trace_csv(const Trace& trace, std::ostream& os);

struct LatencyStats {
  size_t complete = 0;
  size_t incomplete = 0;
  TimeNs min = 0;
  TimeNs median = 0;
  TimeNs p99 = 0;
  TimeNs max = 0;
  std::vector<TimeNs> per_round;  // ordered by round tag
};

// Round latency = last worker's first FA receipt - first worker's first PA send.
LatencyStats measure_allreduce_latency(const Trace& trace);

struct NetCounters {
  uint64_t packets_sent = 0;
  uint64_t bytes_sent = 0;
  uint64_t retransmissions = 0;
  uint64_t drops = 0;
  uint64_t dups = 0;
  uint64_t deliveries = 0;
};

struct StuckSlot {
  int worker = 0;
  uint16_t slot = 0;
  SlotPhase phase = SlotPhase::kAwaitingFa;
};

class LivenessFailure : public std::runtime_error {
 public:
  LivenessFailure(const std::string& what, std::vector<StuckSlot> stuck)
      : std::runtime_error(what), stuck_(std::move(stuck)) {}
  const std::vector<StuckSlot>& stuck() const { return stuck_; }

 private:
  std::vector<StuckSlot> stuck_;
};

// One switch (or endhost server) and W workers star-connected over lossy
// links, driven by a virtual-time event queue. Single-threaded.
class Cluster {
 public:
  using FaHook = std::function<void(int worker, uint16_t slot, uint64_t round, const std::vector<int32_t>& fa)>;
  using FreedHook = std::function<void(int worker, uint16_t slot)>;

  explicit Cluster(NetConfig cfg);

  TimeNs now() const { return now_; }
  const NetConfig& config() const { return cfg_; }

  // Schedules `fn` at virtual time `at` (>= now).
  void schedule(TimeNs at, std::function<void()> fn);

  // Starts an aggregation from `worker`; nullopt when the next slot is busy.
  std::optional<uint16_t> submit(int worker, std::span<const int32_t> pa, uint64_t round);

  void on_fa(FaHook hook) { fa_hook_ = std::move(hook); }
  void on_freed(FreedHook hook) { freed_hook_ = std::move(hook); }

  // Processes events until `done()` holds, the queue drains, or the next event
  // lies beyond `horizon`. Returns true iff `done()` holds.
  bool run_until(const std::function<bool()>& done, TimeNs horizon);

  std::vector<StuckSlot> stuck_slots() const;
  bool any_inflight() const;

  const Trace& trace() const { return trace_; }
  const NetCounters& counters() const { return counters_; }
  const SwitchState& aggregator() const { return switch_; }
  const WorkerProtoState& worker(int w) const { return workers_[static_cast<size_t>(w)]; }

  // Slots where PAs of two different rounds were accepted into one sum.
  uint64_t mixed_round_events() const { return mixed_rounds_; }

  // Latency of every round whose FA reached all workers, in completion order;
  // same definition as measure_allreduce_latency.
  struct RoundLatency {
    uint64_t round = 0;
    TimeNs latency = 0;
  };
  const std::vector<RoundLatency>& round_latencies() const { return latencies_; }

  void set_tracing(bool on) { tracing_ = on; }

 private:
  struct Message {
    Packet pkt;
    int final_dest;
    uint64_t round;
    bool retransmit;
  };
  struct Deliver {
    int node;
    int from;
    Message msg;
  };
  struct Timer {
    int worker;
    uint16_t slot;
    uint64_t generation;
  };
  struct Callback {
    std::function<void()> fn;
  };
  struct Event {
    TimeNs time;
    uint64_t order;
    std::variant<Deliver, Timer, Callback> body;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.order > b.order;
    }
  };

  int switch_node() const { return cfg_.workers; }
  int host_node() const { return cfg_.workers + 1; }
  int aggregator_node() const {
    return cfg_.topology == Topology::kInSwitch ? switch_node() : host_node();
  }
  size_t link_index(int from, int to) const;

  void push(TimeNs at, std::variant<Deliver, Timer, Callback> body);
  void transmit(int from, int to, Message msg, TimeNs depart);
  void record(TraceEvent ev);
  double uniform();
  TimeNs jitter();

  void handle(Deliver& d);
  void handle(const Timer& t);
  void apply_worker_action(int w, WorkerAction act, bool retransmit);
  void aggregate_at(int node, Message msg);

  static PacketKind classify(const Packet& pkt, bool from_aggregator);

  NetConfig cfg_;
  TimeNs now_ = 0;
  uint64_t order_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::mt19937_64 rng_;

  SwitchState switch_;
  std::vector<WorkerProtoState> workers_;
  std::vector<std::vector<uint64_t>> worker_round_;  // [worker][slot]
  std::vector<uint64_t> slot_round_;                 // switch side
  std::vector<TimeNs> link_last_arrival_;
  std::vector<TimeNs> uplink_free_;
  uint64_t mixed_rounds_ = 0;

  struct RoundTrack {
    TimeNs first_send = 0;
    uint32_t delivered = 0;  // worker bitmap
  };
  std::unordered_map<uint64_t, RoundTrack> open_rounds_;
  std::vector<RoundLatency> latencies_;

  FaHook fa_hook_;
  FreedHook freed_hook_;
  Trace trace_;
  NetCounters counters_;
  bool tracing_ = true;
};

// Fuzz workload: every worker contributes `rounds` pseudo-random PA vectors.
struct Workload {
  size_t rounds = 1;
  uint64_t seed = 1;
};

struct RunResult {
  Trace trace;
  NetCounters counters;
  size_t rounds_completed = 0;
  bool live = true;                // false when the horizon was hit
  std::vector<StuckSlot> stuck;    // populated on liveness failure
  uint64_t fa_mismatches = 0;      // FA differs from the ground-truth sum
  uint64_t duplicate_deliveries = 0;
  uint64_t mixed_round_events = 0;
  TimeNs end_time = 0;

  bool ok() const { return live && fa_mismatches == 0 && duplicate_deliveries == 0 && mixed_round_events == 0; }
};

// PA ground truth for (round, worker) of a workload.
std::vector<int32_t> workload_pa(const Workload& wl, size_t round, int worker, size_t mb);

RunResult run(const NetConfig& cfg, const Workload& workload, TimeNs horizon);

}  // namespace netagg
