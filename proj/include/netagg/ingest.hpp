// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "netagg/glm.hpp"

namespace netagg {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, size_t line) : std::runtime_error(what), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PartitionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SparseRow {
  double label = 0.0;
  std::vector<std::pair<size_t, double>> entries;  // 0-based feature index, value
};

struct SparseDataset {
  size_t features = 0;  // max index seen
  std::vector<SparseRow> rows;
};

SparseDataset parse_libsvm(std::istream& in);
SparseDataset parse_libsvm(const std::filesystem::path& path);

struct Dataset {
  size_t samples = 0;
  size_t features = 0;
  std::vector<FixedQ16> labels;
  std::vector<uint8_t> features_u8;  // row-major samples x features

  LabeledData woven() const;
};

// Per-feature min-max scaling to [0, 1 - 2^-8], rounded to the nearest UQ0.8
// raw (ties up). Constant features map to 0. Logistic labels -1/+1 become 0/1.
Dataset normalize_quantize(const SparseDataset& sparse, LossKind kind);

// Dense real-valued view (raw / 256) of a quantized dataset.
SparseDataset to_sparse(const Dataset& data);

enum class PartitionMode : uint8_t { kModel, kData };

struct PartitionPlan {
  PartitionMode mode = PartitionMode::kModel;
  std::vector<FeatureSpan> spans;  // model: M*N feature spans; data: M sample spans
};

// Model mode splits `features` into M*N contiguous 64-feature-aligned spans,
// earlier spans one chunk larger when the split is uneven. Data mode splits
// `samples` into M contiguous spans, earlier spans larger.
PartitionPlan plan_partitions(size_t features, size_t samples, size_t workers, size_t engines, PartitionMode mode);

struct SyntheticSpec {
  size_t samples = 1024;
  size_t features = 4096;
  double margin = 0.2;
  double noise = 0.1;
  uint64_t seed = 7;
};

// Two Gaussian blobs with labels 0/1. The first half of the features is
// shifted up by margin/2 for class 1 and down for class 0, the second half the
// other way round, so the classes are linearly separable through the origin.
SparseDataset make_synthetic(const SyntheticSpec& spec);

}  // namespace netagg
