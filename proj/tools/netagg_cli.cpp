// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

// netagg command-line front end: train, fuzz, latency, predict, compare.
// Exit codes: 0 success, 1 property violation, 2 usage or configuration error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "netagg/config.hpp"
#include "netagg/costmodel.hpp"
#include "netagg/ingest.hpp"
#include "netagg/netsim.hpp"
#include "netagg/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace netagg {
namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

// Thrown for bad flags or config values that CLI11 cannot see.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags that mirror config keys. Non-empty values override the config file.
class KeyFlags {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option(flag, values_[key], help + " [" + key + "]");
  }
  void apply(KeyValueConfig& kv) const {
    for (const auto& [k, v] : values_) {
      if (!v.empty()) kv.set(k, v);
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

// Shared options of every subcommand.
struct Common {
  std::string config;
  std::string out = ".";
  std::string seed;
  KeyFlags keys;
  std::map<std::string, std::string> forced;  // set by plain flags
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "key=value config file, or a run.json from an earlier run");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "seed override [seed]");
}

KeyValueConfig load_config(const Common& c) {
  KeyValueConfig kv;
  if (!c.config.empty()) {
    const fs::path path(c.config);
    if (path.extension() == ".json") {
      std::ifstream in(path);
      if (!in) throw ConfigError("config not found: " + c.config);
      const json doc = json::parse(in, nullptr, false);
      if (doc.is_discarded() || !doc.contains("config") || !doc["config"].is_object()) {
        throw ConfigError("run file has no config object: " + c.config);
      }
      for (const auto& [k, v] : doc["config"].items()) kv.set(k, v.is_string() ? v.get<std::string>() : v.dump());
    } else {
      kv = KeyValueConfig::load(path);
    }
  }
  c.keys.apply(kv);
  if (!c.seed.empty()) kv.set("seed", c.seed);
  for (const auto& [k, v] : c.forced) kv.set(k, v);
  return kv;
}

void reject_unused(const KeyValueConfig& kv) {
  const auto left = kv.unused();
  if (left.empty()) return;
  std::string names;
  for (const auto& k : left) names += (names.empty() ? "" : ", ") + k;
  throw ConfigError("unknown config keys: " + names);
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

void write_run_json(const fs::path& dir, const std::string& sub, const std::map<std::string, std::string>& cfg,
                    const json& results) {
  json doc;
  doc["tool"] = "netagg";
  doc["version"] = kVersion;
  doc["compiler"] = __VERSION__;
  doc["subcommand"] = sub;
  doc["config"] = cfg;
  doc["results"] = results;
  std::ofstream(dir / "run.json") << doc.dump(2) << '\n';
}

std::string real_string(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- train

struct LoadedData {
  LabeledData data;
  size_t features = 0;  // unpadded
};

LoadedData load_dataset(const TrainJob& job) {
  const SparseDataset sparse =
      job.dataset.path.empty() ? make_synthetic(job.dataset.synthetic) : parse_libsvm(fs::path(job.dataset.path));
  const Dataset ds = normalize_quantize(sparse, job.training.kind);
  return {ds.woven(), ds.features};
}

TrainResult run_job(const TrainJob& job, const LabeledData& data) {
  return job.mode == TrainMode::kModelParallel ? train_model_parallel(data, job.training)
                                               : train_data_parallel(data, job.training);
}

int cmd_train(const Common& c, const std::string& mode) {
  KeyValueConfig kv = load_config(c);
  if (!mode.empty()) kv.set("mode", mode);
  const TrainJob job = train_job_from(kv);
  reject_unused(kv);
  const LoadedData loaded = load_dataset(job);
  const TrainResult res = run_job(job, loaded.data);

  const fs::path dir = out_dir(c);
  {
    std::ofstream os(dir / "metrics.csv");
    write_metrics_csv(res.metrics, os);
  }
  {
    std::ofstream os(dir / "model.bin", std::ios::binary);
    for (size_t j = 0; j < loaded.features; ++j) {
      const auto u = static_cast<uint32_t>(res.model[j].raw);
      const char bytes[4] = {static_cast<char>(u), static_cast<char>(u >> 8), static_cast<char>(u >> 16),
                             static_cast<char>(u >> 24)};
      os.write(bytes, 4);
    }
  }
  const auto& m = res.metrics;
  json results;
  results["features"] = loaded.features;
  results["samples"] = loaded.data.woven.samples();
  results["iterations"] = m.iterations;
  results["initial_loss"] = m.initial_loss;
  results["final_loss"] = m.epochs.empty() ? m.initial_loss : m.epochs.back().loss;
  results["packets_sent"] = m.counters.packets_sent;
  results["bytes_sent"] = m.counters.bytes_sent;
  results["retransmissions"] = m.counters.retransmissions;
  results["virtual_time_ns"] = m.epochs.empty() ? 0 : m.epochs.back().virtual_time;
  results["lockstep_violations"] = m.lockstep_violations;
  results["replica_mismatches"] = m.replica_mismatches;
  write_run_json(dir, "train", describe(job), results);

  std::cout << "mode=" << to_string(job.mode) << " workers=" << job.training.workers
            << " epochs=" << job.training.epochs << " loss " << m.initial_loss << " -> "
            << results["final_loss"].get<double>() << " bytes=" << m.counters.bytes_sent
            << " out=" << dir.string() << '\n';
  return m.replica_mismatches == 0 ? kExitOk : kExitViolation;
}

// ---------------------------------------------------------------- fuzz

struct FuzzSpec {
  NetConfig net;
  size_t rounds = 1000;
  uint64_t first_seed = 1;
  uint64_t seeds = 10;
  TimeNs horizon_ns = 1'000'000'000;

  static FuzzSpec from(const KeyValueConfig& kv) {
    FuzzSpec f;
    f.net.workers = static_cast<int>(kv.get_int("workers", 8));
    f.net.slots = static_cast<size_t>(kv.get_int("slots", 16));
    f.net.mb = static_cast<size_t>(kv.get_int("micro", 8));
    f.net.switch_proc_ns = kv.get_int("switch_proc_ns", 100);
    f.net.timeout_ns = kv.get_int("timeout_ns", 0);
    f.net.fault.drop_prob = kv.get_double("drop_prob", 0.1);
    f.net.fault.dup_prob = kv.get_double("dup_prob", 0.05);
    f.net.fault.latency_ns = kv.get_int("latency_ns", 500);
    f.net.fault.jitter_ns = kv.get_int("jitter_ns", 200);
    f.net.fault.fifo_links = kv.get_bool("fifo_links", true);
    f.net.switch_options.mutate_skip_agg_dup_check = kv.get_bool("mutate", false);
    f.rounds = static_cast<size_t>(kv.get_int("rounds", 1000));
    f.first_seed = static_cast<uint64_t>(kv.get_int("seed", 1));
    f.seeds = static_cast<uint64_t>(kv.get_int("seeds", 10));
    f.horizon_ns = kv.get_int("horizon_ns", f.horizon_ns);
    if (f.seeds < 1 || f.rounds < 1) throw ConfigError("rounds and seeds must be positive");
    return f;
  }

  std::map<std::string, std::string> describe() const {
    return {{"workers", std::to_string(net.workers)},
            {"slots", std::to_string(net.slots)},
            {"micro", std::to_string(net.mb)},
            {"switch_proc_ns", std::to_string(net.switch_proc_ns)},
            {"timeout_ns", std::to_string(net.timeout_ns)},
            {"drop_prob", real_string(net.fault.drop_prob)},
            {"dup_prob", real_string(net.fault.dup_prob)},
            {"latency_ns", std::to_string(net.fault.latency_ns)},
            {"jitter_ns", std::to_string(net.fault.jitter_ns)},
            {"fifo_links", net.fault.fifo_links ? "true" : "false"},
            {"mutate", net.switch_options.mutate_skip_agg_dup_check ? "true" : "false"},
            {"rounds", std::to_string(rounds)},
            {"seed", std::to_string(first_seed)},
            {"seeds", std::to_string(seeds)},
            {"horizon_ns", std::to_string(horizon_ns)}};
  }
};

int cmd_fuzz(const Common& c) {
  KeyValueConfig kv = load_config(c);
  const FuzzSpec spec = FuzzSpec::from(kv);
  reject_unused(kv);
  const fs::path dir = out_dir(c);

  const auto n = static_cast<int64_t>(spec.seeds);
  std::vector<RunResult> results(static_cast<size_t>(n));
  std::vector<std::string> errors(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    NetConfig net = spec.net;
    net.fault.seed = spec.first_seed + static_cast<uint64_t>(i);
    try {
      results[static_cast<size_t>(i)] = run(net, Workload{spec.rounds, net.fault.seed}, spec.horizon_ns);
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  }

  std::ofstream csv(dir / "fuzz.csv");
  csv << "seed,pass,rounds_completed,retransmissions,drops,dups,fa_mismatches,duplicate_deliveries,"
         "mixed_round_events,live,end_time_ns\n";
  json per_seed = json::array();
  bool all_ok = true;
  for (int64_t i = 0; i < n; ++i) {
    const uint64_t seed = spec.first_seed + static_cast<uint64_t>(i);
    const auto& r = results[static_cast<size_t>(i)];
    const auto& err = errors[static_cast<size_t>(i)];
    const bool ok = err.empty() && r.ok() && r.rounds_completed == spec.rounds;
    all_ok = all_ok && ok;
    csv << seed << ',' << (ok ? 1 : 0) << ',' << r.rounds_completed << ',' << r.counters.retransmissions << ','
        << r.counters.drops << ',' << r.counters.dups << ',' << r.fa_mismatches << ',' << r.duplicate_deliveries
        << ',' << r.mixed_round_events << ',' << (r.live ? 1 : 0) << ',' << r.end_time << '\n';
    std::cout << "seed=" << seed << ' ' << (ok ? "PASS" : "FAIL") << " rounds=" << r.rounds_completed << '/'
              << spec.rounds << " retx=" << r.counters.retransmissions << " fa_mismatches=" << r.fa_mismatches
              << " duplicate_deliveries=" << r.duplicate_deliveries << " mixed_rounds=" << r.mixed_round_events
              << " live=" << (r.live ? 1 : 0);
    json entry = {{"seed", seed}, {"pass", ok}};
    if (!err.empty()) {
      std::cout << " error=\"" << err << '"';
      entry["error"] = err;
    }
    if (!ok && !r.trace.events.empty()) {
      const fs::path trace_path = dir / ("fuzz_trace_seed" + std::to_string(seed) + ".csv");
      std::ofstream os(trace_path);
      write_trace_csv(r.trace, os);
      std::cout << " trace=" << trace_path.string();
      entry["trace"] = trace_path.string();
    }
    for (const auto& s : r.stuck) {
      std::cout << " stuck=" << node_name(s.worker, spec.net.workers) << ":slot" << s.slot;
    }
    std::cout << '\n';
    per_seed.push_back(entry);
  }
  write_run_json(dir, "fuzz", spec.describe(), json{{"all_pass", all_ok}, {"seeds", per_seed}});
  std::cout << (all_ok ? "all seeds passed" : "property violation detected") << '\n';
  return all_ok ? kExitOk : kExitViolation;
}

// ---------------------------------------------------------------- latency

int cmd_latency(const Common& c) {
  KeyValueConfig kv = load_config(c);
  NetConfig net;
  net.workers = static_cast<int>(kv.get_int("workers", 8));
  net.slots = static_cast<size_t>(kv.get_int("slots", 16));
  net.mb = static_cast<size_t>(kv.get_int("micro", 8));
  net.switch_proc_ns = kv.get_int("switch_proc_ns", 100);
  net.host_proc_ns = kv.get_int("host_proc_ns", 2000);
  net.timeout_ns = kv.get_int("timeout_ns", 0);
  net.fault.latency_ns = kv.get_int("latency_ns", 500);
  net.fault.jitter_ns = kv.get_int("jitter_ns", 0);
  net.fault.drop_prob = kv.get_double("drop_prob", 0.0);
  net.fault.dup_prob = kv.get_double("dup_prob", 0.0);
  net.fault.seed = static_cast<uint64_t>(kv.get_int("seed", 1));
  const auto rounds = static_cast<size_t>(kv.get_int("rounds", 100));
  reject_unused(kv);
  const fs::path dir = out_dir(c);

  struct Row {
    std::string name;
    LatencyStats stats;
  };
  std::vector<Row> rows;
  for (Topology topo : {Topology::kInSwitch, Topology::kEndhostServer}) {
    NetConfig cfg = net;
    cfg.topology = topo;
    const RunResult r = run(cfg, Workload{rounds, net.fault.seed}, TimeNs{1} << 40);
    if (!r.ok()) {
      std::cerr << "latency run failed its protocol checks\n";
      return kExitViolation;
    }
    rows.push_back({topo == Topology::kInSwitch ? "in_switch" : "endhost_server", measure_allreduce_latency(r.trace)});
  }

  std::ofstream csv(dir / "latency.csv");
  csv << "topology,rounds,min_ns,p50_ns,p99_ns,max_ns,p50_ratio_to_in_switch\n";
  const double base = static_cast<double>(rows.front().stats.median);
  json results = json::object();
  for (const auto& row : rows) {
    const auto& s = row.stats;
    const double ratio = static_cast<double>(s.median) / base;
    csv << row.name << ',' << s.complete << ',' << s.min << ',' << s.median << ',' << s.p99 << ',' << s.max << ','
        << ratio << '\n';
    std::cout << row.name << ": p50=" << s.median << " ns p99=" << s.p99 << " ns (" << s.complete << " rounds)\n";
    results[row.name] = {{"p50_ns", s.median}, {"p99_ns", s.p99}, {"rounds", s.complete}};
  }
  const double ratio = static_cast<double>(rows.back().stats.median) / base;
  std::cout << "endhost/in_switch p50 ratio=" << ratio << '\n';
  results["p50_ratio"] = ratio;

  std::map<std::string, std::string> cfg = {{"workers", std::to_string(net.workers)},
                                            {"slots", std::to_string(net.slots)},
                                            {"micro", std::to_string(net.mb)},
                                            {"switch_proc_ns", std::to_string(net.switch_proc_ns)},
                                            {"host_proc_ns", std::to_string(net.host_proc_ns)},
                                            {"timeout_ns", std::to_string(net.timeout_ns)},
                                            {"latency_ns", std::to_string(net.fault.latency_ns)},
                                            {"jitter_ns", std::to_string(net.fault.jitter_ns)},
                                            {"drop_prob", real_string(net.fault.drop_prob)},
                                            {"dup_prob", real_string(net.fault.dup_prob)},
                                            {"seed", std::to_string(net.fault.seed)},
                                            {"rounds", std::to_string(rounds)}};
  write_run_json(dir, "latency", cfg, results);
  return kExitOk;
}

// ---------------------------------------------------------------- predict

// "1..8", "1,2,4" or "1e6".
std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  auto number = [&](const std::string& tok) {
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != tok.size()) throw ConfigError("key '" + key + "': bad number '" + tok + "'");
    return v;
  };
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (const auto dots = item.find(".."); dots != std::string::npos) {
      const double lo = number(item.substr(0, dots));
      const double hi = number(item.substr(dots + 2));
      if (hi < lo || hi - lo > 1e6) throw ConfigError("key '" + key + "': bad range '" + item + "'");
      for (double v = lo; v <= hi; v += 1) out.push_back(v);
    } else {
      out.push_back(number(item));
    }
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<int64_t> int_list(const KeyValueConfig& kv, const std::string& key, const std::string& fallback) {
  std::vector<int64_t> out;
  for (double v : parse_list(key, kv.get_string(key, fallback))) {
    if (v != std::floor(v)) throw ConfigError("key '" + key + "': expected integers");
    out.push_back(static_cast<int64_t>(v));
  }
  return out;
}

int cmd_predict(const Common& c) {
  KeyValueConfig kv = load_config(c);
  const auto fs_ = int_list(kv, "F", "1..8");
  const auto gs = int_list(kv, "G", "1");
  const auto ms = int_list(kv, "M_feat", "65536");
  const auto bs = int_list(kv, "B", "64");
  const auto ss = int_list(kv, "s", "4");
  const auto rtt = kv.get_int("L_RTT", 1000);
  const double peak = kv.get_double("peak", 19.2);
  reject_unused(kv);
  const fs::path dir = out_dir(c);

  std::ofstream csv(dir / "predict.csv");
  csv.precision(10);
  csv << "F,G,M_feat,B,s,L_RTT,work_cycles,utilization,th_comp_gbps,th_mem_gbps,th_engine_gbps,th_all_gbps\n";
  size_t rows = 0;
  for (auto f : fs_)
    for (auto g : gs)
      for (auto m : ms)
        for (auto b : bs)
          for (auto s : ss) {
            cost::CostParams p;
            p.fpgas = f;
            p.engines = g;
            p.model_dim = m;
            p.batch = b;
            p.precision = static_cast<int>(s);
            p.rtt_cycles = rtt;
            p.peak_gbps = peak;
            try {
              cost::validate(p);
            } catch (const std::invalid_argument& e) {
              throw ConfigError(e.what());
            }
            csv << f << ',' << g << ',' << m << ',' << b << ',' << s << ',' << rtt << ',' << cost::work_cycles(p)
                << ',' << cost::utilization(p) << ',' << cost::th_comp(p) << ',' << cost::th_mem(p.precision, p.mem)
                << ',' << cost::th_engine(p) << ',' << cost::th_all(p) << '\n';
            ++rows;
          }
  auto join = [](const std::vector<int64_t>& v) {
    std::string s;
    for (auto x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
    return s;
  };
  write_run_json(dir, "predict",
                 {{"F", join(fs_)}, {"G", join(gs)}, {"M_feat", join(ms)}, {"B", join(bs)}, {"s", join(ss)},
                  {"L_RTT", std::to_string(rtt)}, {"peak", real_string(peak)}},
                 json{{"rows", rows}});
  std::cout << "wrote " << rows << " rows to " << (dir / "predict.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- compare

TimeNs median_iteration(std::vector<TimeNs> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

int cmd_compare(const Common& c) {
  KeyValueConfig kv = load_config(c);
  const TrainJob base = train_job_from(kv);
  reject_unused(kv);
  const LoadedData loaded = load_dataset(base);
  const size_t d = loaded.data.woven.padded_features();
  const fs::path dir = out_dir(c);

  const IterationEstimate eq = simulate_iteration_time(iteration_timing(base.training, d));
  struct Mode {
    const char* name;
    TrainMode mode;
    Schedule schedule;
    double predicted;
  };
  const Mode modes[] = {{"dp", TrainMode::kDataParallel, Schedule::kPipelined, eq.dp},
                        {"vanilla_mp", TrainMode::kModelParallel, Schedule::kVanilla, eq.vanilla_mp},
                        {"pipelined_mp", TrainMode::kModelParallel, Schedule::kPipelined, eq.pipelined_mp}};

  std::ofstream csv(dir / "compare.csv");
  csv << "mode,batch,micro,workers,measured_ns,predicted_ns,rel_error,bytes_per_iteration\n";
  json results = json::object();
  for (const auto& m : modes) {
    TrainJob job = base;
    job.mode = m.mode;
    job.training.schedule = m.schedule;
    job.training.report_loss = false;
    const TrainResult r = run_job(job, loaded.data);
    const double measured = static_cast<double>(median_iteration(r.metrics.iteration_times));
    const double rel = (measured - m.predicted) / m.predicted;
    const double bytes = r.metrics.iterations ? static_cast<double>(r.metrics.counters.bytes_sent) /
                                                    static_cast<double>(r.metrics.iterations)
                                              : 0.0;
    csv << m.name << ',' << job.training.batch << ',' << job.training.micro << ',' << job.training.workers << ','
        << measured << ',' << m.predicted << ',' << rel << ',' << bytes << '\n';
    std::cout << m.name << ": measured=" << measured << " ns predicted=" << m.predicted << " ns rel_error=" << rel
              << " bytes/iter=" << bytes << '\n';
    results[m.name] = {{"measured_ns", measured}, {"predicted_ns", m.predicted}, {"bytes_per_iteration", bytes}};
  }
  write_run_json(dir, "compare", describe(base), results);
  return kExitOk;
}

}  // namespace
}  // namespace netagg

int main(int argc, char** argv) {
  using namespace netagg;
  CLI::App app{"netagg: in-network aggregation training simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common train_c, fuzz_c, latency_c, predict_c, compare_c;
  std::string mode;

  auto* train = app.add_subcommand("train", "train a model and write metrics.csv, model.bin, run.json");
  add_common(train, train_c);
  train->add_option("--mode", mode, "dp or mp [mode]");
  train_c.keys.add(train, "--dataset", "dataset", "LIBSVM file or 'synthetic'");
  train_c.keys.add(train, "--workers", "workers", "worker count");
  train_c.keys.add(train, "--epochs", "epochs", "epochs");
  train_c.keys.add(train, "--drop", "drop_prob", "per-transmission drop probability");

  auto* fuzz = app.add_subcommand("fuzz", "check exactly-once aggregation and liveness over many seeds");
  add_common(fuzz, fuzz_c);
  fuzz_c.keys.add(fuzz, "--rounds", "rounds", "AllReduce rounds per worker");
  fuzz_c.keys.add(fuzz, "--workers,-W", "workers", "worker count");
  fuzz_c.keys.add(fuzz, "--slots,-N", "slots", "aggregation slots");
  fuzz_c.keys.add(fuzz, "--micro", "micro", "payload elements per packet");
  fuzz_c.keys.add(fuzz, "--drop", "drop_prob", "per-transmission drop probability");
  fuzz_c.keys.add(fuzz, "--dup", "dup_prob", "per-transmission duplication probability");
  fuzz_c.keys.add(fuzz, "--jitter", "jitter_ns", "maximum extra link delay");
  fuzz_c.keys.add(fuzz, "--latency", "latency_ns", "one-way link latency");
  fuzz_c.keys.add(fuzz, "--seeds", "seeds", "number of seeds, starting at --seed");
  bool mutate = false;
  fuzz->add_flag("--mutate", mutate, "test only: disable the switch duplicate check to self-test the checker");

  auto* latency = app.add_subcommand("latency", "AllReduce latency, in-switch vs endhost server");
  add_common(latency, latency_c);
  latency_c.keys.add(latency, "--rounds", "rounds", "rounds to measure");
  latency_c.keys.add(latency, "--workers,-W", "workers", "worker count");
  latency_c.keys.add(latency, "--latency", "latency_ns", "one-way link latency");
  latency_c.keys.add(latency, "--switch-proc", "switch_proc_ns", "switch processing time");
  latency_c.keys.add(latency, "--host-proc", "host_proc_ns", "endhost server processing time");

  auto* predict = app.add_subcommand("predict", "cost-model throughput sweep");
  add_common(predict, predict_c);
  predict_c.keys.add(predict, "--F", "F", "FPGA counts, e.g. 1..8");
  predict_c.keys.add(predict, "--G", "G", "engines per FPGA");
  predict_c.keys.add(predict, "--M-feat", "M_feat", "model dimensions");
  predict_c.keys.add(predict, "--B", "B", "mini-batch sizes");
  predict_c.keys.add(predict, "--s", "s", "precisions");
  predict_c.keys.add(predict, "--L-RTT", "L_RTT", "network round trip in cycles");

  auto* compare = app.add_subcommand("compare", "measured vs predicted iteration time for dp, vanilla, pipelined");
  add_common(compare, compare_c);
  compare_c.keys.add(compare, "--batch,-B", "batch", "mini-batch size");
  compare_c.keys.add(compare, "--micro", "micro", "micro-batch size");
  compare_c.keys.add(compare, "--workers", "workers", "worker count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_c, mode);
    if (fuzz->parsed()) {
      if (mutate) fuzz_c.forced["mutate"] = "true";
      return cmd_fuzz(fuzz_c);
    }
    if (latency->parsed()) return cmd_latency(latency_c);
    if (predict->parsed()) return cmd_predict(predict_c);
    if (compare->parsed()) return cmd_compare(compare_c);
  } catch (const LivenessFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& s : e.stuck()) std::cerr << "  stuck: worker " << s.worker << " slot " << s.slot << '\n';
    return kExitViolation;
  } catch (const ConsistencyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitViolation;
  } catch (const std::exception& e) {
    // Config, data, partition and precision errors.
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
