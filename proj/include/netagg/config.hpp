// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <set>
#include <string>

#include "netagg/costmodel.hpp"
#include "netagg/ingest.hpp"
#include "netagg/trainer.hpp"

namespace netagg {

// Flat `key = value` configuration with `#` comments. Every lookup marks the
// key as consumed so leftovers can be reported as typos.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // First present key among `keys` (aliases), else nullptr.
  const std::string* find(std::initializer_list<std::string> keys) const;

  std::set<std::string> unused() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

enum class TrainMode : uint8_t { kModelParallel, kDataParallel };

struct DatasetSource {
  std::string path;  // empty selects the synthetic generator
  SyntheticSpec synthetic;
};

struct TrainJob {
  TrainingConfig training;
  TrainMode mode = TrainMode::kModelParallel;
  DatasetSource dataset;
};

// Reads TrainingConfig field names (and short aliases such as M, B, MB, s, E).
// Throws ConfigError on malformed values.
TrainJob train_job_from(const KeyValueConfig& kv);
cost::CostParams cost_params_from(const KeyValueConfig& kv);

// Every key train_job_from understands, resolved; parsing it back yields the same job.
std::map<std::string, std::string> describe(const TrainJob& job);

std::string to_string(LossKind kind);
std::string to_string(Schedule schedule);
std::string to_string(TrainMode mode);

}  // namespace netagg
