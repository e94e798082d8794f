// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "netagg/glm.hpp"
#include "netagg/netsim.hpp"

namespace netagg {

enum class Schedule : uint8_t {
  kPipelined,  // micro-batch forward/communication/backward overlap
  kVanilla,    // forward whole mini-batch, then communicate, then backward
};

// Compute-time model for one worker. Per-sample times of zero are derived
// from the hardware model: an engine consumes one 64-feature chunk of one
// bit plane per cycle in each of its banks, and the engines of a worker run
// in parallel over their feature spans.
struct TimingParams {
  double clock_mhz = 250.0;
  double fwd_ns_per_sample = 0.0;  // model-parallel, this worker's partition
  double bwd_ns_per_sample = 0.0;
  TimeNs update_ns = 0;
};

struct TrainingConfig {
  int workers = 1;         // M
  int engines = 1;         // N engines per worker
  int banks = 8;           // samples processed in parallel per engine
  size_t batch = 64;       // B, power of two
  size_t micro = 8;        // MB, packet payload length, divides B
  int precision = 4;       // s
  FixedQ16 gamma = FixedQ16{64};
  int epochs = 1;
  LossKind kind = LossKind::kSquared;
  size_t slots = 16;
  Schedule schedule = Schedule::kPipelined;
  FaultModel fault;
  TimeNs switch_proc_ns = 100;
  TimeNs timeout_ns = 0;             // 0 selects 4 x latency
  double uplink_elems_per_ns = 0.0;  // 0 disables serialization delay
  TimingParams timing;
  TimeNs horizon_ns = TimeNs{1} << 60;
  bool report_loss = true;
  bool trace = false;                // keep the full packet trace
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  TimeNs virtual_time = 0;
  uint64_t packets = 0;
  uint64_t bytes = 0;
  uint64_t retransmissions = 0;
  TimeNs allreduce_p50 = 0;
  TimeNs allreduce_p99 = 0;
};

struct TrainMetrics {
  double initial_loss = 0.0;
  std::vector<EpochMetrics> epochs;
  std::vector<TimeNs> iteration_times;  // worker 0, forward start to model update
  uint64_t iterations = 0;
  uint64_t lockstep_violations = 0;
  uint64_t replica_mismatches = 0;  // data parallel only
  NetCounters counters;             // totals
  Trace trace;                      // empty unless TrainingConfig::trace
};

struct TrainResult {
  std::vector<FixedQ16> model;  // padded feature width
  TrainMetrics metrics;
};

// Validates the cross-field constraints; throws ConfigError.
void validate(const TrainingConfig& cfg, size_t features);

// Micro-batch pipelined model-parallel SGD over M workers x N engines, with
// activations aggregated through the simulated switch.
TrainResult train_model_parallel(const LabeledData& data, const TrainingConfig& cfg);

// Data-parallel baseline: each mini-batch is split across M workers holding
// full model replicas; gradients are summed through the switch in
// ceil(D/MB) slot-sized pieces.
TrainResult train_data_parallel(const LabeledData& data, const TrainingConfig& cfg);

// Per-worker compute times for one micro-batch (model parallel).
struct MicroTiming {
  TimeNs forward_ns = 0;
  TimeNs backward_ns = 0;
};
MicroTiming micro_timing(const TrainingConfig& cfg, std::span<const FeatureSpan> engine_spans);

// Inputs of the iteration-time equations; times in ns, bandwidth in
// elements per ns.
struct IterationTiming {
  double t_f_m = 0;  // model-parallel forward, one mini-batch
  double t_b_m = 0;
  double t_f_d = 0;  // data-parallel forward, one mini-batch
  double t_b_d = 0;
  double bandwidth = 1;
  double t_l = 0;    // aggregation latency
  double batch = 64;
  double micro = 8;
  double model_dim = 0;
};

struct IterationEstimate {
  double dp = 0;
  double vanilla_mp = 0;
  double pipelined_mp = 0;
};

IterationEstimate simulate_iteration_time(const IterationTiming& t);

// Data-parallel compute time (forward + gradient) of `local` samples over
// the full model of `padded_features`.
TimeNs data_parallel_compute_ns(const TrainingConfig& cfg, size_t padded_features, size_t local);

// Equation inputs implied by a configuration: model-parallel times of worker
// 0, T_l = 2 x link latency + switch processing, bandwidth = uplink rate
// (infinite when serialization is disabled).
IterationTiming iteration_timing(const TrainingConfig& cfg, size_t padded_features);

void write_metrics_csv(const TrainMetrics& m, std::ostream& os);

}  // namespace netagg
