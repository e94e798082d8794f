// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/glm.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

#include "netagg/kernels.hpp"

namespace netagg {

WovenMatrix::WovenMatrix(size_t samples, size_t features)
    : samples_(samples),
      features_(features),
      chunks_((features + kChunkFeatures - 1) / kChunkFeatures),
      planes_(samples * chunks_ * kPlanes, 0) {}

uint8_t WovenMatrix::feature(size_t sample, size_t j, int s) const {
  const size_t chunk = j / kChunkFeatures;
  const size_t bit = j % kChunkFeatures;
  uint8_t v = 0;
  for (int p = 0; p < s; ++p) {
    if ((plane(sample, chunk, p) >> bit) & 1u) v |= static_cast<uint8_t>(0x80u >> p);
  }
  return v;
}

WovenMatrix weave(std::span<const uint8_t> features, size_t samples, size_t n_features) {
  if (features.size() != samples * n_features) throw ConfigError("feature buffer size mismatch");
  WovenMatrix out(samples, n_features);
  for (size_t i = 0; i < samples; ++i) {
    const uint8_t* row = features.data() + i * n_features;
    for (size_t j = 0; j < n_features; ++j) {
      const uint8_t v = row[j];
      if (v == 0) continue;
      const size_t chunk = j / kChunkFeatures;
      const uint64_t bit = uint64_t{1} << (j % kChunkFeatures);
      for (int p = 0; p < kPlanes; ++p) {
        if (v & (0x80u >> p)) out.plane(i, chunk, p) |= bit;
      }
    }
  }
  return out;
}

std::vector<uint8_t> unweave(const WovenMatrix& woven) {
  std::vector<uint8_t> out(woven.samples() * woven.features());
  for (size_t i = 0; i < woven.samples(); ++i) {
    for (size_t j = 0; j < woven.features(); ++j) out[i * woven.features() + j] = woven.feature(i, j);
  }
  return out;
}

void check_precision(int s) {
  if (s < 1 || s > kPlanes) throw PrecisionError("precision " + std::to_string(s) + " outside [1, 8]");
}

namespace {

void check_span(const WovenMatrix& woven, FeatureSpan span, size_t len) {
  if (span.begin > span.end || span.end > woven.padded_features()) throw ConfigError("feature span out of range");
  if (len != span.size()) throw ConfigError("vector length does not match the feature span");
}

}  // namespace

FixedQ16 bit_serial_dot(const WovenMatrix& woven, size_t sample, FeatureSpan span,
                        std::span<const FixedQ16> weights, int s) {
  check_precision(s);
  check_span(woven, span, weights.size());
  return FixedQ16{kernels::dot_row(woven, sample, span, weights, s)};
}

FixedQ16 bit_serial_dot(const WovenMatrix& woven, size_t sample, std::span<const FixedQ16> weights, int s) {
  return bit_serial_dot(woven, sample, FeatureSpan{0, weights.size()}, weights, s);
}

void backward_accumulate(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t sample, FeatureSpan span,
                         FixedQ16 scale, int s) {
  check_precision(s);
  check_span(woven, span, grad.size());
  kernels::accumulate_row(grad, woven, sample, span, scale, s);
}

namespace {

constexpr int kLutSegments = 256;
constexpr int32_t kLutLo = -8 * FixedQ16::kOne;
constexpr int kLutStepShift = 12;  // 1/16 in Q16.16

std::array<int32_t, kLutSegments + 1> build_sigmoid_table() {
  std::array<int32_t, kLutSegments + 1> t{};
  for (int k = 0; k < kLutSegments; ++k) {
    const double x = -8.0 + static_cast<double>(k) / 16.0;
    t[static_cast<size_t>(k)] = static_cast<int32_t>(std::lround(FixedQ16::kOne / (1.0 + std::exp(-x))));
  }
  t[kLutSegments / 2] = FixedQ16::kOne / 2;
  t[kLutSegments] = FixedQ16::kOne;
  return t;
}

const std::array<int32_t, kLutSegments + 1>& sigmoid_table() {
  static const auto table = build_sigmoid_table();
  return table;
}

}  // namespace

FixedQ16 sigmoid_lut(FixedQ16 activation) {
  const auto& t = sigmoid_table();
  const int64_t off = static_cast<int64_t>(activation.raw) - kLutLo;
  if (off < 0) return FixedQ16{t.front()};
  if (off >= (int64_t{kLutSegments} << kLutStepShift)) return FixedQ16{t.back()};
  const auto k = static_cast<size_t>(off >> kLutStepShift);
  const int64_t frac = off & ((int64_t{1} << kLutStepShift) - 1);
  const int64_t y = t[k] + (((static_cast<int64_t>(t[k + 1]) - t[k]) * frac) >> kLutStepShift);
  return FixedQ16{static_cast<int32_t>(y)};
}

FixedQ16 df(LossKind kind, FixedQ16 activation, FixedQ16 label) {
  switch (kind) {
    case LossKind::kSquared: return activation - label;
    case LossKind::kLogistic: return sigmoid_lut(activation) - label;
  }
  return FixedQ16{};
}

int log2_exact(size_t v) {
  if (v == 0 || !std::has_single_bit(v)) return -1;
  return std::countr_zero(v);
}

void model_update(std::span<FixedQ16> x, std::span<const FixedQ16> g, size_t batch) {
  const int shift = log2_exact(batch);
  if (shift < 0) throw ConfigError("mini-batch size " + std::to_string(batch) + " is not a power of two");
  if (x.size() != g.size()) throw ConfigError("model/gradient length mismatch");
  for (size_t j = 0; j < x.size(); ++j) x[j] = FixedQ16{wrap_sub(x[j].raw, g[j].raw >> shift)};
}

double training_loss(const LabeledData& data, std::span<const FixedQ16> model, int s, LossKind kind) {
  const size_t n = data.woven.samples();
  if (n == 0) return 0.0;
  std::vector<int32_t> act(n);
  kernels::forward_batch(data.woven, 0, n, FeatureSpan{0, model.size()}, model, s, act);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double a = fx_to_real(FixedQ16{act[i]});
    const double b = fx_to_real(data.labels[i]);
    if (kind == LossKind::kSquared) {
      total += 0.5 * (a - b) * (a - b);
    } else {
      // log(1 + e^a) - b*a, stable for large |a|
      const double softplus = a > 0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
      total += softplus - b * a;
    }
  }
  return total / static_cast<double>(n);
}

SgdResult reference_sgd(const LabeledData& data, const SgdConfig& cfg, bool report_loss) {
  check_precision(cfg.precision);
  if (log2_exact(cfg.batch) < 0) throw ConfigError("mini-batch size must be a power of two");
  if (data.labels.size() != data.woven.samples()) throw ConfigError("label count mismatch");

  const size_t d = data.woven.padded_features();
  const size_t n = data.woven.samples();
  const FeatureSpan all{0, d};
  SgdResult res;
  res.model.assign(d, FixedQ16{});
  std::vector<FixedQ16> grad(d);
  if (report_loss) res.loss.push_back(training_loss(data, res.model, cfg.precision, cfg.kind));

  for (int e = 0; e < cfg.epochs; ++e) {
    for (size_t i = 0; i < n; i += cfg.batch) {
      std::fill(grad.begin(), grad.end(), FixedQ16{});
      const size_t end = std::min(n, i + cfg.batch);
      for (size_t t = i; t < end; ++t) {
        const FixedQ16 activation = bit_serial_dot(data.woven, t, all, res.model, cfg.precision);
        const FixedQ16 scale = cfg.gamma * df(cfg.kind, activation, data.labels[t]);
        backward_accumulate(grad, data.woven, t, all, scale, cfg.precision);
      }
      model_update(res.model, grad, cfg.batch);
    }
    if (report_loss) res.loss.push_back(training_loss(data, res.model, cfg.precision, cfg.kind));
  }
  return res;
}

}  // namespace netagg
