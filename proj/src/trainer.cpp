// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include "netagg/ingest.hpp"
#include "netagg/kernels.hpp"

namespace netagg {

namespace {

TimeNs cycles_to_ns(double cycles, double clock_mhz) {
  return static_cast<TimeNs>(std::llround(cycles * 1000.0 / clock_mhz));
}

size_t ceil_div(size_t a, size_t b) { return (a + b - 1) / b; }

NetConfig net_config(const TrainingConfig& cfg) {
  NetConfig net;
  net.workers = cfg.workers;
  net.slots = cfg.slots;
  net.mb = cfg.micro;
  net.topology = Topology::kInSwitch;
  net.switch_proc_ns = cfg.switch_proc_ns;
  net.timeout_ns = cfg.timeout_ns;
  net.uplink_elems_per_ns = cfg.uplink_elems_per_ns;
  net.fault = cfg.fault;
  return net;
}

uint64_t fnv1a(std::span<const FixedQ16> v) {
  uint64_t h = 1469598103934665603ull;
  for (FixedQ16 x : v) {
    const auto u = static_cast<uint32_t>(x.raw);
    for (int i = 0; i < 4; ++i) {
      h ^= (u >> (8 * i)) & 0xFFu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

// Shared bookkeeping of one simulated training run: iteration indexing,
// epoch snapshots, metrics and the lock-step record.
class RunBase {
 public:
  RunBase(const LabeledData& data, const TrainingConfig& cfg)
      : data_(data),
        cfg_(cfg),
        cluster_(net_config(cfg)),
        samples_(data.woven.samples()),
        iters_per_epoch_(ceil_div(samples_, cfg.batch)),
        total_iters_(iters_per_epoch_ * static_cast<size_t>(cfg.epochs)),
        workers_(static_cast<size_t>(cfg.workers)) {
    cluster_.set_tracing(cfg.trace);
    start_time_.assign(workers_, std::vector<TimeNs>(total_iters_, -1));
    update_time_.assign(workers_, std::vector<TimeNs>(total_iters_, -1));
    finished_.assign(workers_, false);
  }

 protected:
  size_t batch_begin(size_t it) const { return (it % iters_per_epoch_) * cfg_.batch; }
  size_t batch_count(size_t it) const { return std::min(cfg_.batch, samples_ - batch_begin(it)); }

  bool all_finished() const {
    return std::all_of(finished_.begin(), finished_.end(), [](bool f) { return f; });
  }

  // Called after worker `m` applied the update of iteration `it`; `part` is
  // its model state, placed at feature offset `offset` of the full model.
  void on_updated(size_t m, size_t it, std::span<const FixedQ16> part, size_t offset) {
    update_time_[m][it] = cluster_.now();
    if (m == 0) metrics_.iteration_times.push_back(cluster_.now() - start_time_[m][it]);
    if ((it + 1) % iters_per_epoch_ != 0) return;
    const size_t epoch = it / iters_per_epoch_;
    auto& snap = snapshots_[epoch];
    if (snap.model.empty()) snap.model.assign(data_.woven.padded_features(), FixedQ16{});
    std::copy(part.begin(), part.end(), snap.model.begin() + static_cast<std::ptrdiff_t>(offset));
    if (++snap.reported == workers_) close_epoch(epoch);
  }

  void close_epoch(size_t epoch) {
    auto& snap = snapshots_[epoch];
    EpochMetrics em;
    em.epoch = static_cast<int>(epoch) + 1;
    if (cfg_.report_loss) em.loss = training_loss(data_, snap.model, cfg_.precision, cfg_.kind);
    em.virtual_time = cluster_.now();
    const auto& c = cluster_.counters();
    em.packets = c.packets_sent - last_counters_.packets_sent;
    em.bytes = c.bytes_sent - last_counters_.bytes_sent;
    em.retransmissions = c.retransmissions - last_counters_.retransmissions;
    last_counters_ = c;
    metrics_.epochs.push_back(em);
    final_model_ = std::move(snap.model);
    snapshots_.erase(epoch);
  }

  void fill_latency(uint64_t rounds_per_iter) {
    std::vector<std::vector<TimeNs>> per_epoch(metrics_.epochs.size());
    const uint64_t rounds_per_epoch = rounds_per_iter * iters_per_epoch_;
    for (const auto& rl : cluster_.round_latencies()) {
      const auto e = static_cast<size_t>(rl.round / rounds_per_epoch);
      if (e < per_epoch.size()) per_epoch[e].push_back(rl.latency);
    }
    for (size_t e = 0; e < per_epoch.size(); ++e) {
      auto& v = per_epoch[e];
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      metrics_.epochs[e].allreduce_p50 = v[(v.size() - 1) / 2];
      const auto rank = static_cast<size_t>(std::ceil(0.99 * static_cast<double>(v.size())));
      metrics_.epochs[e].allreduce_p99 = v[std::max<size_t>(rank, 1) - 1];
    }
  }

  void count_lockstep() {
    for (size_t it = 0; it + 1 < total_iters_; ++it) {
      TimeNs barrier = 0;
      for (size_t m = 0; m < workers_; ++m) barrier = std::max(barrier, update_time_[m][it]);
      for (size_t m = 0; m < workers_; ++m) {
        if (start_time_[m][it + 1] < barrier) ++metrics_.lockstep_violations;
      }
    }
  }

  TrainResult finish(uint64_t rounds_per_iter) {
    auto done = [this] { return all_finished() && !cluster_.any_inflight(); };
    if (!cluster_.run_until(done, cfg_.horizon_ns)) {
      throw LivenessFailure("training stalled at virtual time " + std::to_string(cluster_.now()) + " ns",
                            cluster_.stuck_slots());
    }
    // Deliver stray duplicates so the counters cover every transmission.
    cluster_.run_until([] { return false; }, cfg_.horizon_ns);
    if (!metrics_.epochs.empty()) {
      const auto& c = cluster_.counters();
      auto& em = metrics_.epochs.back();
      em.packets += c.packets_sent - last_counters_.packets_sent;
      em.bytes += c.bytes_sent - last_counters_.bytes_sent;
      em.retransmissions += c.retransmissions - last_counters_.retransmissions;
    }
    fill_latency(rounds_per_iter);
    count_lockstep();
    metrics_.iterations = total_iters_;
    metrics_.counters = cluster_.counters();
    if (cfg_.trace) metrics_.trace = cluster_.trace();
    if (cfg_.report_loss) metrics_.initial_loss = training_loss(data_, std::vector<FixedQ16>(data_.woven.padded_features()), cfg_.precision, cfg_.kind);
    TrainResult res;
    res.model = total_iters_ == 0 ? std::vector<FixedQ16>(data_.woven.padded_features()) : std::move(final_model_);
    res.metrics = std::move(metrics_);
    return res;
  }

  struct Snapshot {
    std::vector<FixedQ16> model;
    size_t reported = 0;
  };

  const LabeledData& data_;
  const TrainingConfig& cfg_;
  Cluster cluster_;
  size_t samples_;
  size_t iters_per_epoch_;
  size_t total_iters_;
  size_t workers_;
  std::vector<std::vector<TimeNs>> start_time_;
  std::vector<std::vector<TimeNs>> update_time_;
  std::vector<bool> finished_;
  std::map<size_t, Snapshot> snapshots_;
  std::vector<FixedQ16> final_model_;
  NetCounters last_counters_;
  TrainMetrics metrics_;
};

// Per-worker send queue in front of the slot-gated protocol.
struct SendQueue {
  std::deque<std::pair<uint64_t, std::vector<int32_t>>> pending;

  void flush(Cluster& cluster, int worker) {
    while (!pending.empty()) {
      if (!cluster.submit(worker, pending.front().second, pending.front().first)) return;
      pending.pop_front();
    }
  }
};

class ModelParallelRun : public RunBase {
 public:
  ModelParallelRun(const LabeledData& data, const TrainingConfig& cfg) : RunBase(data, cfg) {
    const size_t d = data.woven.padded_features();
    const auto plan = plan_partitions(d, samples_, workers_, static_cast<size_t>(cfg.engines), PartitionMode::kModel);
    const auto n = static_cast<size_t>(cfg.engines);
    micro_per_batch_ = cfg.batch / cfg.micro;
    states_.resize(workers_);
    for (size_t m = 0; m < workers_; ++m) {
      auto& w = states_[m];
      w.engines.assign(plan.spans.begin() + static_cast<std::ptrdiff_t>(m * n),
                       plan.spans.begin() + static_cast<std::ptrdiff_t>((m + 1) * n));
      w.span = {w.engines.front().begin, w.engines.back().end};
      w.x.assign(w.span.size(), FixedQ16{});
      w.g.assign(w.span.size(), FixedQ16{});
      w.fa.assign(micro_per_batch_, {});
      w.timing = micro_timing(cfg, w.engines);
    }
    cluster_.on_fa([this](int w, uint16_t, uint64_t round, const std::vector<int32_t>& fa) { on_fa(w, round, fa); });
    cluster_.on_freed([this](int w, uint16_t) { states_[static_cast<size_t>(w)].queue.flush(cluster_, w); });
  }

  TrainResult run() {
    for (size_t m = 0; m < workers_; ++m) start_iteration(m);
    return finish(micro_per_batch_);
  }

 private:
  struct Worker {
    std::vector<FeatureSpan> engines;
    FeatureSpan span;
    std::vector<FixedQ16> x;
    std::vector<FixedQ16> g;
    MicroTiming timing;
    size_t it = 0;
    size_t micros = 0;
    size_t fa_received = 0;
    size_t backward_done = 0;
    bool backward_busy = false;
    std::vector<std::vector<int32_t>> fa;
    std::deque<size_t> backward_ready;
    SendQueue queue;
  };

  // Engine spans relative to the worker's partition.
  static FeatureSpan local(const Worker& w, FeatureSpan e) { return {e.begin - w.span.begin, e.end - w.span.begin}; }

  void start_iteration(size_t m) {
    auto& w = states_[m];
    if (w.it == total_iters_) {
      finished_[m] = true;
      return;
    }
    start_time_[m][w.it] = cluster_.now();
    std::fill(w.g.begin(), w.g.end(), FixedQ16{});
    w.micros = ceil_div(batch_count(w.it), cfg_.micro);
    w.fa_received = 0;
    w.backward_done = 0;
    w.backward_ready.clear();
    const TimeNs t0 = cluster_.now();
    for (size_t j = 0; j < w.micros; ++j) {
      const TimeNs at = cfg_.schedule == Schedule::kPipelined ? t0 + static_cast<TimeNs>(j + 1) * w.timing.forward_ns
                                                              : t0 + static_cast<TimeNs>(w.micros) * w.timing.forward_ns;
      cluster_.schedule(at, [this, m, j] { forward_done(m, j); });
    }
  }

  std::pair<size_t, size_t> micro_range(const Worker& w, size_t j) const {
    const size_t first = batch_begin(w.it) + j * cfg_.micro;
    const size_t count = std::min(cfg_.micro, batch_begin(w.it) + batch_count(w.it) - first);
    return {first, count};
  }

  // Partial activations of micro-batch j over all engines of the worker.
  void forward_done(size_t m, size_t j) {
    auto& w = states_[m];
    const auto [first, count] = micro_range(w, j);
    std::vector<int32_t> pa(cfg_.micro, 0);
    std::vector<int32_t> part(count);
    for (const auto& e : w.engines) {
      const auto weights = std::span<const FixedQ16>(w.x).subspan(e.begin - w.span.begin, e.size());
      kernels::forward_batch(data_.woven, first, count, e, weights, cfg_.precision, part);
      for (size_t k = 0; k < count; ++k) pa[k] = wrap_add(pa[k], part[k]);
    }
    w.queue.pending.emplace_back(w.it * micro_per_batch_ + j, std::move(pa));
    w.queue.flush(cluster_, static_cast<int>(m));
  }

  void on_fa(int wi, uint64_t round, const std::vector<int32_t>& fa) {
    const auto m = static_cast<size_t>(wi);
    auto& w = states_[m];
    const size_t it = round / micro_per_batch_;
    const size_t j = round % micro_per_batch_;
    if (it != w.it) throw ConsistencyError("full activation for a foreign iteration");
    w.fa[j] = fa;
    ++w.fa_received;
    if (cfg_.schedule == Schedule::kPipelined) {
      w.backward_ready.push_back(j);
    } else if (w.fa_received == w.micros) {
      for (size_t k = 0; k < w.micros; ++k) w.backward_ready.push_back(k);
    }
    try_backward(m);
  }

  void try_backward(size_t m) {
    auto& w = states_[m];
    if (w.backward_busy || w.backward_ready.empty()) return;
    const size_t j = w.backward_ready.front();
    w.backward_ready.pop_front();
    w.backward_busy = true;
    cluster_.schedule(cluster_.now() + w.timing.backward_ns, [this, m, j] { backward_done(m, j); });
  }

  void backward_done(size_t m, size_t j) {
    auto& w = states_[m];
    const auto [first, count] = micro_range(w, j);
    std::vector<FixedQ16> scales(count);
    for (size_t k = 0; k < count; ++k) {
      scales[k] = cfg_.gamma * df(cfg_.kind, FixedQ16{w.fa[j][k]}, data_.labels[first + k]);
    }
    for (const auto& e : w.engines) {
      const FeatureSpan le = local(w, e);
      auto grad = std::span<FixedQ16>(w.g).subspan(le.begin, le.size());
      kernels::backward_batch(grad, data_.woven, first, count, e, scales, cfg_.precision);
    }
    w.backward_busy = false;
    if (++w.backward_done < w.micros) {
      try_backward(m);
      return;
    }
    cluster_.schedule(cluster_.now() + cfg_.timing.update_ns, [this, m] {
      auto& wk = states_[m];
      model_update(wk.x, wk.g, cfg_.batch);
      on_updated(m, wk.it, wk.x, wk.span.begin);
      ++wk.it;
      start_iteration(m);
    });
  }

  size_t micro_per_batch_ = 0;
  std::vector<Worker> states_;
};

class DataParallelRun : public RunBase {
 public:
  DataParallelRun(const LabeledData& data, const TrainingConfig& cfg) : RunBase(data, cfg) {
    d_ = data.woven.padded_features();
    pieces_ = ceil_div(d_, cfg.micro);
    states_.resize(workers_);
    for (auto& w : states_) {
      w.x.assign(d_, FixedQ16{});
      w.g.assign(d_, FixedQ16{});
      w.sum.assign(d_, FixedQ16{});
    }
    hashes_.assign(workers_, std::vector<uint64_t>(total_iters_, 0));
    cluster_.on_fa([this](int w, uint16_t, uint64_t round, const std::vector<int32_t>& fa) { on_fa(w, round, fa); });
    cluster_.on_freed([this](int w, uint16_t) { states_[static_cast<size_t>(w)].queue.flush(cluster_, w); });
  }

  TrainResult run() {
    for (size_t m = 0; m < workers_; ++m) start_iteration(m);
    TrainResult res = finish(pieces_);
    for (size_t it = 0; it < total_iters_; ++it) {
      for (size_t m = 1; m < workers_; ++m) {
        if (hashes_[m][it] != hashes_[0][it]) ++res.metrics.replica_mismatches;
      }
    }
    return res;
  }

 private:
  struct Worker {
    std::vector<FixedQ16> x;
    std::vector<FixedQ16> g;
    std::vector<FixedQ16> sum;
    size_t it = 0;
    size_t received = 0;
    SendQueue queue;
  };

  // Sample sub-block of worker m within the mini-batch; earlier workers larger.
  std::pair<size_t, size_t> local_block(size_t it, size_t m) const {
    const size_t count = batch_count(it);
    const size_t base = count / workers_;
    const size_t rem = count % workers_;
    const size_t lo = m * base + std::min(m, rem);
    return {batch_begin(it) + lo, base + (m < rem ? 1 : 0)};
  }

  void start_iteration(size_t m) {
    auto& w = states_[m];
    if (w.it == total_iters_) {
      finished_[m] = true;
      return;
    }
    start_time_[m][w.it] = cluster_.now();
    const auto [first, count] = local_block(w.it, m);
    cluster_.schedule(cluster_.now() + data_parallel_compute_ns(cfg_, d_, count), [this, m] { compute_done(m); });
  }

  void compute_done(size_t m) {
    auto& w = states_[m];
    const auto [first, count] = local_block(w.it, m);
    const FeatureSpan all{0, d_};
    std::fill(w.g.begin(), w.g.end(), FixedQ16{});
    std::vector<int32_t> act(count);
    kernels::forward_batch(data_.woven, first, count, all, w.x, cfg_.precision, act);
    std::vector<FixedQ16> scales(count);
    for (size_t k = 0; k < count; ++k) {
      scales[k] = cfg_.gamma * df(cfg_.kind, FixedQ16{act[k]}, data_.labels[first + k]);
    }
    kernels::backward_batch(w.g, data_.woven, first, count, all, scales, cfg_.precision);

    w.received = 0;
    std::fill(w.sum.begin(), w.sum.end(), FixedQ16{});
    for (size_t p = 0; p < pieces_; ++p) {
      std::vector<int32_t> payload(cfg_.micro, 0);
      for (size_t i = 0; i < cfg_.micro && p * cfg_.micro + i < d_; ++i) payload[i] = w.g[p * cfg_.micro + i].raw;
      w.queue.pending.emplace_back(w.it * pieces_ + p, std::move(payload));
    }
    w.queue.flush(cluster_, static_cast<int>(m));
  }

  void on_fa(int wi, uint64_t round, const std::vector<int32_t>& fa) {
    const auto m = static_cast<size_t>(wi);
    auto& w = states_[m];
    if (round / pieces_ != w.it) throw ConsistencyError("gradient piece for a foreign iteration");
    const size_t p = round % pieces_;
    for (size_t i = 0; i < cfg_.micro && p * cfg_.micro + i < d_; ++i) w.sum[p * cfg_.micro + i] = FixedQ16{fa[i]};
    if (++w.received < pieces_) return;
    cluster_.schedule(cluster_.now() + cfg_.timing.update_ns, [this, m] {
      auto& wk = states_[m];
      model_update(wk.x, wk.sum, cfg_.batch);
      hashes_[m][wk.it] = fnv1a(wk.x);
      on_updated(m, wk.it, m == 0 ? std::span<const FixedQ16>(wk.x) : std::span<const FixedQ16>(), 0);
      ++wk.it;
      start_iteration(m);
    });
  }

  size_t d_ = 0;
  size_t pieces_ = 0;
  std::vector<Worker> states_;
  std::vector<std::vector<uint64_t>> hashes_;
};

}  // namespace

void validate(const TrainingConfig& cfg, size_t features) {
  if (cfg.workers < 1 || cfg.workers > kMaxWorkers) throw ConfigError("workers must be in [1, 32]");
  if (cfg.engines < 1) throw ConfigError("engines must be positive");
  if (cfg.banks < 1) throw ConfigError("banks must be positive");
  if (log2_exact(cfg.batch) < 0) throw ConfigError("mini-batch size must be a power of two");
  if (cfg.micro == 0 || cfg.batch % cfg.micro != 0) throw ConfigError("micro-batch must divide the mini-batch");
  check_precision(cfg.precision);
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.slots < 1 || cfg.slots > 65536) throw ConfigError("slots must be in [1, 65536]");
  if (features == 0) throw ConfigError("dataset has no features");
}

MicroTiming micro_timing(const TrainingConfig& cfg, std::span<const FeatureSpan> engine_spans) {
  MicroTiming t;
  const auto& tp = cfg.timing;
  const double mb = static_cast<double>(cfg.micro);
  size_t widest = 0;
  for (const auto& e : engine_spans) widest = std::max(widest, ceil_div(e.size(), kChunkFeatures));
  const double cycles = static_cast<double>(ceil_div(cfg.micro, static_cast<size_t>(cfg.banks))) *
                        static_cast<double>(widest) * cfg.precision;
  t.forward_ns = tp.fwd_ns_per_sample > 0 ? static_cast<TimeNs>(std::llround(mb * tp.fwd_ns_per_sample))
                                          : cycles_to_ns(cycles, tp.clock_mhz);
  t.backward_ns = tp.bwd_ns_per_sample > 0 ? static_cast<TimeNs>(std::llround(mb * tp.bwd_ns_per_sample))
                                           : cycles_to_ns(cycles, tp.clock_mhz);
  return t;
}

TimeNs data_parallel_compute_ns(const TrainingConfig& cfg, size_t padded_features, size_t local) {
  const auto& t = cfg.timing;
  if (t.fwd_ns_per_sample > 0 || t.bwd_ns_per_sample > 0) {
    // Per-sample times describe one model-parallel partition; a replica holds all M.
    const double per_sample = static_cast<double>(cfg.workers) * (t.fwd_ns_per_sample + t.bwd_ns_per_sample);
    return static_cast<TimeNs>(std::llround(static_cast<double>(local) * per_sample));
  }
  const double chunks = static_cast<double>(ceil_div(padded_features, kChunkFeatures * static_cast<size_t>(cfg.engines)));
  const double groups = static_cast<double>(ceil_div(local, static_cast<size_t>(cfg.banks)));
  return cycles_to_ns(2.0 * groups * chunks * cfg.precision, t.clock_mhz);
}

IterationTiming iteration_timing(const TrainingConfig& cfg, size_t padded_features) {
  const auto plan = plan_partitions(padded_features, cfg.batch, static_cast<size_t>(cfg.workers),
                                    static_cast<size_t>(cfg.engines), PartitionMode::kModel);
  const auto engines = std::span<const FeatureSpan>(plan.spans).first(static_cast<size_t>(cfg.engines));
  const MicroTiming mt = micro_timing(cfg, engines);
  const double micros = static_cast<double>(cfg.batch / cfg.micro);
  IterationTiming t;
  t.t_f_m = static_cast<double>(mt.forward_ns) * micros;
  t.t_b_m = static_cast<double>(mt.backward_ns) * micros;
  t.t_f_d = static_cast<double>(
      data_parallel_compute_ns(cfg, padded_features, ceil_div(cfg.batch, static_cast<size_t>(cfg.workers))));
  t.t_b_d = static_cast<double>(cfg.timing.update_ns) * static_cast<double>(cfg.batch);
  t.bandwidth = cfg.uplink_elems_per_ns > 0 ? cfg.uplink_elems_per_ns : std::numeric_limits<double>::infinity();
  t.t_l = static_cast<double>(2 * cfg.fault.latency_ns + cfg.switch_proc_ns);
  t.batch = static_cast<double>(cfg.batch);
  t.micro = static_cast<double>(cfg.micro);
  t.model_dim = static_cast<double>(padded_features);
  return t;
}

TrainResult train_model_parallel(const LabeledData& data, const TrainingConfig& cfg) {
  validate(cfg, data.woven.padded_features());
  ModelParallelRun run(data, cfg);
  return run.run();
}

TrainResult train_data_parallel(const LabeledData& data, const TrainingConfig& cfg) {
  validate(cfg, data.woven.padded_features());
  if (log2_exact(static_cast<size_t>(cfg.workers)) < 0) {
    throw ConfigError("data-parallel training needs a power-of-two worker count");
  }
  DataParallelRun run(data, cfg);
  return run.run();
}

IterationEstimate simulate_iteration_time(const IterationTiming& t) {
  IterationEstimate e;
  e.dp = t.t_f_d + t.t_b_d / t.batch + t.model_dim / t.bandwidth + t.t_l;
  e.vanilla_mp = t.t_f_m + t.t_b_m + t.batch / t.bandwidth + t.t_l;
  e.pipelined_mp = (t.micro / t.batch) * t.t_f_m + t.t_b_m + t.micro / t.bandwidth + t.t_l;
  return e;
}

void write_metrics_csv(const TrainMetrics& m, std::ostream& os) {
  os << "epoch,loss,virtual_time_ns,pkts,bytes,retx,allreduce_p50_ns,allreduce_p99_ns\n";
  os.precision(17);
  os << 0 << ',' << m.initial_loss << ",0,0,0,0,0,0\n";
  for (const auto& e : m.epochs) {
    os << e.epoch << ',' << e.loss << ',' << e.virtual_time << ',' << e.packets << ',' << e.bytes << ','
       << e.retransmissions << ',' << e.allreduce_p50 << ',' << e.allreduce_p99 << '\n';
  }
}

}  // namespace netagg
