// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

namespace netagg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int64_t to_int(const std::string& key, const std::string& v) {
  int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

double to_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig kv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not found: " + path.string());
  return parse(in);
}

const std::string* KeyValueConfig::find(std::initializer_list<std::string> keys) const {
  for (const auto& k : keys) {
    if (auto it = values_.find(k); it != values_.end()) {
      used_.insert(k);
      return &it->second;
    }
  }
  return nullptr;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto* v = find({key});
  return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto* v = find({key});
  return v ? to_real(key, *v) : fallback;
}

int64_t KeyValueConfig::get_int(const std::string& key, int64_t fallback) const {
  const auto* v = find({key});
  return v ? to_int(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto* v = find({key});
  if (!v) return fallback;
  if (*v == "1" || *v == "true" || *v == "yes") return true;
  if (*v == "0" || *v == "false" || *v == "no") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::set<std::string> KeyValueConfig::unused() const {
  std::set<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.insert(k);
  }
  return out;
}

TrainJob train_job_from(const KeyValueConfig& kv) {
  TrainJob job;
  auto& t = job.training;
  // Aliases: the long TrainingConfig names and the short symbols.
  auto integer = [&](std::initializer_list<std::string> keys, int64_t fallback) {
    const auto* v = kv.find(keys);
    return v ? to_int(*keys.begin(), *v) : fallback;
  };
  auto real = [&](std::initializer_list<std::string> keys, double fallback) {
    const auto* v = kv.find(keys);
    return v ? to_real(*keys.begin(), *v) : fallback;
  };

  t.workers = static_cast<int>(integer({"workers", "M"}, t.workers));
  t.engines = static_cast<int>(integer({"engines", "N_engines"}, t.engines));
  t.banks = static_cast<int>(integer({"banks"}, t.banks));
  t.batch = static_cast<size_t>(integer({"batch", "B"}, static_cast<int64_t>(t.batch)));
  t.micro = static_cast<size_t>(integer({"micro", "MB"}, static_cast<int64_t>(t.micro)));
  t.precision = static_cast<int>(integer({"precision", "s"}, t.precision));
  t.epochs = static_cast<int>(integer({"epochs", "E"}, t.epochs));
  t.slots = static_cast<size_t>(integer({"slots", "N"}, static_cast<int64_t>(t.slots)));
  if (const auto* g = kv.find({"gamma_raw"})) {
    t.gamma = FixedQ16{static_cast<int32_t>(to_int("gamma_raw", *g))};
  } else {
    t.gamma = fx_from_real(real({"gamma"}, fx_to_real(t.gamma)));
  }

  if (const auto* k = kv.find({"kind"})) {
    if (*k == "squared") t.kind = LossKind::kSquared;
    else if (*k == "logistic") t.kind = LossKind::kLogistic;
    else throw ConfigError("kind must be squared or logistic");
  }
  if (const auto* s = kv.find({"schedule"})) {
    if (*s == "pipelined") t.schedule = Schedule::kPipelined;
    else if (*s == "vanilla") t.schedule = Schedule::kVanilla;
    else throw ConfigError("schedule must be pipelined or vanilla");
  }
  if (const auto* m = kv.find({"mode"})) {
    if (*m == "mp") job.mode = TrainMode::kModelParallel;
    else if (*m == "dp") job.mode = TrainMode::kDataParallel;
    else throw ConfigError("mode must be mp or dp");
  }

  t.fault.drop_prob = real({"drop_prob", "drop"}, t.fault.drop_prob);
  t.fault.dup_prob = real({"dup_prob", "dup"}, t.fault.dup_prob);
  t.fault.latency_ns = integer({"latency_ns"}, t.fault.latency_ns);
  t.fault.jitter_ns = integer({"jitter_ns"}, t.fault.jitter_ns);
  t.fault.seed = static_cast<uint64_t>(integer({"seed"}, static_cast<int64_t>(t.fault.seed)));
  t.fault.fifo_links = kv.get_bool("fifo_links", t.fault.fifo_links);
  t.switch_proc_ns = integer({"switch_proc_ns"}, t.switch_proc_ns);
  t.timeout_ns = integer({"timeout_ns"}, t.timeout_ns);
  t.uplink_elems_per_ns = real({"bw", "uplink_elems_per_ns"}, t.uplink_elems_per_ns);
  t.timing.clock_mhz = real({"clock_mhz"}, t.timing.clock_mhz);
  t.timing.fwd_ns_per_sample = real({"fwd_ns_per_sample"}, t.timing.fwd_ns_per_sample);
  t.timing.bwd_ns_per_sample = real({"bwd_ns_per_sample"}, t.timing.bwd_ns_per_sample);
  t.timing.update_ns = integer({"update_ns"}, t.timing.update_ns);

  job.dataset.path = kv.get_string("dataset", "synthetic");
  if (job.dataset.path == "synthetic") job.dataset.path.clear();
  auto& syn = job.dataset.synthetic;
  syn.samples = static_cast<size_t>(integer({"synth_samples", "S"}, static_cast<int64_t>(syn.samples)));
  syn.features = static_cast<size_t>(integer({"synth_features", "D"}, static_cast<int64_t>(syn.features)));
  syn.margin = real({"synth_margin", "margin"}, syn.margin);
  syn.noise = real({"synth_noise"}, syn.noise);
  syn.seed = static_cast<uint64_t>(integer({"synth_seed", "data_seed"}, static_cast<int64_t>(syn.seed)));

  if (t.workers < 1 || t.engines < 1 || t.banks < 1 || t.epochs < 0 || t.precision < 1) {
    throw ConfigError("counts must be positive");
  }
  return job;
}

cost::CostParams cost_params_from(const KeyValueConfig& kv) {
  cost::CostParams p;
  auto integer = [&](std::initializer_list<std::string> keys, int64_t fallback) {
    const auto* v = kv.find(keys);
    return v ? to_int(*keys.begin(), *v) : fallback;
  };
  p.fpgas = integer({"F", "fpgas"}, p.fpgas);
  p.engines = integer({"G", "engines"}, p.engines);
  p.model_dim = integer({"M_feat", "model_dim"}, p.model_dim);
  p.batch = integer({"B", "batch"}, p.batch);
  p.precision = static_cast<int>(integer({"s", "precision"}, p.precision));
  p.rtt_cycles = integer({"L_RTT", "rtt_cycles"}, p.rtt_cycles);
  p.peak_gbps = kv.get_double("peak", p.peak_gbps);
  return p;
}

namespace {

std::string real_string(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> describe(const TrainJob& job) {
  const auto& t = job.training;
  const auto& syn = job.dataset.synthetic;
  return {
      {"workers", std::to_string(t.workers)},
      {"engines", std::to_string(t.engines)},
      {"banks", std::to_string(t.banks)},
      {"batch", std::to_string(t.batch)},
      {"micro", std::to_string(t.micro)},
      {"precision", std::to_string(t.precision)},
      {"epochs", std::to_string(t.epochs)},
      {"slots", std::to_string(t.slots)},
      {"gamma_raw", std::to_string(t.gamma.raw)},
      {"kind", to_string(t.kind)},
      {"schedule", to_string(t.schedule)},
      {"mode", to_string(job.mode)},
      {"drop_prob", real_string(t.fault.drop_prob)},
      {"dup_prob", real_string(t.fault.dup_prob)},
      {"latency_ns", std::to_string(t.fault.latency_ns)},
      {"jitter_ns", std::to_string(t.fault.jitter_ns)},
      {"seed", std::to_string(t.fault.seed)},
      {"fifo_links", t.fault.fifo_links ? "true" : "false"},
      {"switch_proc_ns", std::to_string(t.switch_proc_ns)},
      {"timeout_ns", std::to_string(t.timeout_ns)},
      {"uplink_elems_per_ns", real_string(t.uplink_elems_per_ns)},
      {"clock_mhz", real_string(t.timing.clock_mhz)},
      {"fwd_ns_per_sample", real_string(t.timing.fwd_ns_per_sample)},
      {"bwd_ns_per_sample", real_string(t.timing.bwd_ns_per_sample)},
      {"update_ns", std::to_string(t.timing.update_ns)},
      {"dataset", job.dataset.path.empty() ? "synthetic" : job.dataset.path},
      {"synth_samples", std::to_string(syn.samples)},
      {"synth_features", std::to_string(syn.features)},
      {"synth_margin", real_string(syn.margin)},
      {"synth_noise", real_string(syn.noise)},
      {"synth_seed", std::to_string(syn.seed)},
  };
}

std::string to_string(LossKind kind) { return kind == LossKind::kSquared ? "squared" : "logistic"; }
std::string to_string(Schedule schedule) { return schedule == Schedule::kPipelined ? "pipelined" : "vanilla"; }
std::string to_string(TrainMode mode) { return mode == TrainMode::kModelParallel ? "mp" : "dp"; }

}  // namespace netagg
