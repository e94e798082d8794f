// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "netagg/fixed.hpp"

namespace netagg {

class PrecisionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr size_t kChunkFeatures = 64;
constexpr int kPlanes = 8;

// Half-open feature range [begin, end).
struct FeatureSpan {
  size_t begin = 0;
  size_t end = 0;
  size_t size() const { return end - begin; }
  bool operator==(const FeatureSpan&) const = default;
};

// Bit-plane layout of UQ0.8 features. For every sample and every 64-feature
// chunk there are 8 words; word p holds the p-th most significant bit of each
// of the chunk's 64 features (bit j <-> feature chunk*64 + j). A precision-s
// read touches words 0..s-1 only.
class WovenMatrix {
 public:
  WovenMatrix() = default;
  WovenMatrix(size_t samples, size_t features);

  size_t samples() const { return samples_; }
  size_t features() const { return features_; }          // unpadded
  size_t padded_features() const { return chunks_ * kChunkFeatures; }
  size_t chunks() const { return chunks_; }

  uint64_t plane(size_t sample, size_t chunk, int p) const {
    return planes_[(sample * chunks_ + chunk) * kPlanes + static_cast<size_t>(p)];
  }
  uint64_t& plane(size_t sample, size_t chunk, int p) {
    return planes_[(sample * chunks_ + chunk) * kPlanes + static_cast<size_t>(p)];
  }
  // Feature value truncated to its top `s` bits, rebuilt from planes.
  uint8_t feature(size_t sample, size_t j, int s = kPlanes) const;

  bool operator==(const WovenMatrix&) const = default;

 private:
  size_t samples_ = 0;
  size_t features_ = 0;
  size_t chunks_ = 0;
  std::vector<uint64_t> planes_;
};

// `features` is row-major samples x n_features.
WovenMatrix weave(std::span<const uint8_t> features, size_t samples, size_t n_features);
// Row-major samples x features() reconstruction at full precision.
std::vector<uint8_t> unweave(const WovenMatrix& woven);

void check_precision(int s);

// Sum over j in `span` of trunc_s(feature_j) * weights[j - span.begin], each
// product floored to Q16.16, accumulated with wrapping adds. Evaluated
// bit-serially: MSB plane first, one shift-add per set bit into a per-feature
// accumulator.
FixedQ16 bit_serial_dot(const WovenMatrix& woven, size_t sample, FeatureSpan span,
                        std::span<const FixedQ16> weights, int s);
FixedQ16 bit_serial_dot(const WovenMatrix& woven, size_t sample, std::span<const FixedQ16> weights, int s);

// grad[j - span.begin] += trunc_s(feature_j) * scale, same evaluation order.
void backward_accumulate(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t sample, FeatureSpan span,
                         FixedQ16 scale, int s);

enum class LossKind : uint8_t { kSquared, kLogistic };

// 256-segment piecewise-linear sigmoid over [-8, 8); 0.5 at 0, 1.0 at and
// beyond 8, first table value below -8.
FixedQ16 sigmoid_lut(FixedQ16 activation);
FixedQ16 df(LossKind kind, FixedQ16 activation, FixedQ16 label);

// x[j] -= g[j] >> log2(batch). `batch` must be a power of two.
void model_update(std::span<FixedQ16> x, std::span<const FixedQ16> g, size_t batch);
int log2_exact(size_t v);  // -1 unless v is a power of two

struct LabeledData {
  WovenMatrix woven;
  std::vector<FixedQ16> labels;
};

struct SgdConfig {
  size_t batch = 64;
  int precision = 4;
  FixedQ16 gamma = FixedQ16{64};
  int epochs = 1;
  LossKind kind = LossKind::kSquared;
};

struct SgdResult {
  std::vector<FixedQ16> model;
  std::vector<double> loss;  // loss[0] at the initial model, loss[e] after epoch e
};

// Mean training loss of `model` on `data`, real-valued; never feeds back into training.
double training_loss(const LabeledData& data, std::span<const FixedQ16> model, int s, LossKind kind);

// Sequential mini-batch SGD. A trailing partial mini-batch is still divided by `batch`.
SgdResult reference_sgd(const LabeledData& data, const SgdConfig& cfg, bool report_loss = true);

}  // namespace netagg
