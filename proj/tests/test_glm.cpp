// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "netagg/glm.hpp"

namespace netagg {
namespace {

// Independent oracle: per-element truncate, multiply, floor, wrapping sum.
int32_t direct_dot(std::span<const uint8_t> f, std::span<const FixedQ16> w, int s) {
  int32_t acc = 0;
  for (size_t j = 0; j < f.size(); ++j) acc = wrap_add(acc, feature_mul(truncate_bits(f[j], s), w[j].raw));
  return acc;
}

std::vector<uint8_t> random_features(std::mt19937_64& rng, size_t n) {
  std::vector<uint8_t> f(n);
  for (auto& v : f) v = static_cast<uint8_t>(rng());
  return f;
}

std::vector<FixedQ16> random_weights(std::mt19937_64& rng, size_t n, int32_t range = 1 << 20) {
  std::uniform_int_distribution<int32_t> u(-range, range);
  std::vector<FixedQ16> w(n);
  for (auto& v : w) v = FixedQ16{u(rng)};
  return w;
}

TEST(Weave, SingleFeatureBitPlanes) {
  const std::vector<uint8_t> f = {0b11000000};
  const auto w = weave(f, 1, 1);
  EXPECT_EQ(w.plane(0, 0, 0), 1u);
  EXPECT_EQ(w.plane(0, 0, 1), 1u);
  for (int p = 2; p < kPlanes; ++p) EXPECT_EQ(w.plane(0, 0, p), 0u);
  EXPECT_EQ(w.padded_features(), 64u);
}

TEST(Weave, ZeroMatrixHasZeroPlanes) {
  const std::vector<uint8_t> f(3 * 100, 0);
  const auto w = weave(f, 3, 100);
  for (size_t i = 0; i < 3; ++i)
    for (size_t c = 0; c < w.chunks(); ++c)
      for (int p = 0; p < kPlanes; ++p) EXPECT_EQ(w.plane(i, c, p), 0u);
}

TEST(Weave, UnweaveRoundTrip) {
  std::mt19937_64 rng(1);
  const auto f = random_features(rng, 4 * 128);
  EXPECT_EQ(unweave(weave(f, 4, 128)), f);
  const auto g = random_features(rng, 3 * 77);
  EXPECT_EQ(unweave(weave(g, 3, 77)), g);
}

TEST(Weave, PrecisionReadTruncates) {
  const std::vector<uint8_t> f = {0b10110111};
  const auto w = weave(f, 1, 1);
  for (int s = 1; s <= 8; ++s) EXPECT_EQ(w.feature(0, 0, s), truncate_bits(f[0], s));
}

TEST(BitSerialDot, Examples) {
  const std::vector<uint8_t> f = {192};  // 0.75
  const auto w = weave(f, 1, 1);
  std::vector<FixedQ16> one(64, FixedQ16{});
  one[0] = FixedQ16{FixedQ16::kOne};
  EXPECT_EQ(bit_serial_dot(w, 0, one, 1).raw, 32768);
  EXPECT_EQ(bit_serial_dot(w, 0, one, 2).raw, 49152);
  std::vector<FixedQ16> zero(64);
  EXPECT_EQ(bit_serial_dot(w, 0, zero, 8).raw, 0);
  EXPECT_THROW(bit_serial_dot(w, 0, one, 0), PrecisionError);
  EXPECT_THROW(bit_serial_dot(w, 0, one, 9), PrecisionError);
}

TEST(BitSerialDot, MatchesDirectQuantizedDot) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const size_t d = 1 + rng() % 300;
    const auto f = random_features(rng, d);
    const auto x = random_weights(rng, d, trial % 2 ? INT32_MAX : 1 << 18);
    const auto w = weave(f, 1, d);
    for (int s = 1; s <= 8; ++s) {
      ASSERT_EQ(bit_serial_dot(w, 0, FeatureSpan{0, d}, x, s).raw, direct_dot(f, x, s)) << "d=" << d << " s=" << s;
    }
  }
}

TEST(BitSerialDot, PartitionAdditivity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t d = 64 + rng() % 500;
    const auto f = random_features(rng, d);
    const auto x = random_weights(rng, d, INT32_MAX);
    const auto w = weave(f, 1, d);
    const int s = 1 + static_cast<int>(rng() % 8);
    const int32_t whole = bit_serial_dot(w, 0, FeatureSpan{0, d}, x, s).raw;
    for (size_t parts : {2u, 4u, 8u}) {
      std::vector<size_t> cuts = {0, d};
      for (size_t k = 1; k < parts; ++k) cuts.push_back(rng() % (d + 1));
      std::sort(cuts.begin(), cuts.end());
      int32_t sum = 0;
      for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        const FeatureSpan span{cuts[k], cuts[k + 1]};
        std::span<const FixedQ16> part(x.data() + span.begin, span.size());
        sum = wrap_add(sum, bit_serial_dot(w, 0, span, part, s).raw);
      }
      ASSERT_EQ(sum, whole);
    }
  }
}

TEST(BackwardAccumulate, Examples) {
  std::mt19937_64 rng(4);
  const auto f = random_features(rng, 70);
  const auto w = weave(f, 1, 70);
  std::vector<FixedQ16> grad(70, FixedQ16{5});
  backward_accumulate(grad, w, 0, FeatureSpan{0, 70}, FixedQ16{0}, 8);
  for (auto g : grad) EXPECT_EQ(g.raw, 5);

  std::vector<FixedQ16> id(70);
  backward_accumulate(id, w, 0, FeatureSpan{0, 70}, FixedQ16{FixedQ16::kOne}, 8);
  for (size_t j = 0; j < 70; ++j) EXPECT_EQ(id[j].raw, f[j] * 256);

  std::vector<FixedQ16> a(70), b(70);
  backward_accumulate(a, w, 0, FeatureSpan{0, 70}, FixedQ16{12345}, 4);
  backward_accumulate(a, w, 0, FeatureSpan{0, 70}, FixedQ16{-999}, 4);
  for (size_t j = 0; j < 70; ++j) {
    const uint8_t t = truncate_bits(f[j], 4);
    b[j] = FixedQ16{wrap_add(feature_mul(t, 12345), feature_mul(t, -999))};
  }
  EXPECT_EQ(a, b);
}

TEST(BackwardAccumulate, SubSpanWritesOnlyItsRange) {
  std::mt19937_64 rng(6);
  const auto f = random_features(rng, 200);
  const auto w = weave(f, 1, 200);
  std::vector<FixedQ16> grad(50);
  backward_accumulate(grad, w, 0, FeatureSpan{70, 120}, FixedQ16{FixedQ16::kOne}, 8);
  for (size_t j = 0; j < 50; ++j) EXPECT_EQ(grad[j].raw, f[70 + j] * 256);
}

// Squared loss, s=8: fixed-point mini-batch gradient vs the real-valued analytic one.
TEST(Gradient, SquaredLossMatchesAnalytic) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const size_t d = 1 + rng() % 32;
    const size_t batch = size_t{1} << (rng() % 4);
    const auto f = random_features(rng, batch * d);
    std::vector<FixedQ16> x(d);
    for (auto& v : x) v = fx_from_real(ux(rng));
    std::vector<FixedQ16> labels(batch);
    for (auto& b : labels) b = fx_from_real(ux(rng));
    const auto w = weave(f, batch, d);

    std::vector<FixedQ16> grad(d);
    for (size_t t = 0; t < batch; ++t) {
      const FixedQ16 a = bit_serial_dot(w, t, FeatureSpan{0, d}, x, 8);
      backward_accumulate(grad, w, t, FeatureSpan{0, d}, FixedQ16{FixedQ16::kOne} * df(LossKind::kSquared, a, labels[t]),
                          8);
    }
    std::vector<FixedQ16> zero(d), step = zero;
    model_update(step, grad, batch);  // step = -g/B

    for (size_t j = 0; j < d; ++j) {
      double analytic = 0.0;
      for (size_t t = 0; t < batch; ++t) {
        double a = 0.0;
        for (size_t k = 0; k < d; ++k) a += (f[t * d + k] / 256.0) * fx_to_real(x[k]);
        analytic += (f[t * d + j] / 256.0) * (a - fx_to_real(labels[t]));
      }
      analytic /= static_cast<double>(batch);
      ASSERT_LE(std::abs(-fx_to_real(step[j]) - analytic), std::ldexp(1.0, -8)) << "inst " << inst << " j " << j;
    }
  }
}

TEST(Df, Examples) {
  EXPECT_EQ(df(LossKind::kSquared, fx_from_real(2.0), fx_from_real(0.5)), fx_from_real(1.5));
  EXPECT_EQ(df(LossKind::kLogistic, FixedQ16{0}, FixedQ16{0}).raw, 32768);
  EXPECT_EQ(df(LossKind::kLogistic, FixedQ16{0}, fx_from_real(1.0)).raw, -32768);
  EXPECT_EQ(df(LossKind::kLogistic, fx_from_real(8.0), FixedQ16{0}).raw, 65536);
  EXPECT_EQ(df(LossKind::kLogistic, fx_from_real(100.0), fx_from_real(1.0)).raw, 0);
}

TEST(SigmoidLut, CloseToRealSigmoidAndMonotone) {
  int32_t prev = INT32_MIN;
  for (int32_t raw = -10 * 65536; raw <= 10 * 65536; raw += 97) {
    const int32_t y = sigmoid_lut(FixedQ16{raw}).raw;
    ASSERT_GE(y, prev);
    prev = y;
    const double x = raw / 65536.0;
    if (x >= -8.0 && x < 8.0) ASSERT_NEAR(y / 65536.0, 1.0 / (1.0 + std::exp(-x)), 5e-4);
  }
  EXPECT_GE(1.0 / (1.0 + std::exp(-8.0)), 0.99966);
}

TEST(ModelUpdate, Examples) {
  std::vector<FixedQ16> x = {FixedQ16{100}, FixedQ16{-7}};
  const std::vector<FixedQ16> g = {FixedQ16{30}, FixedQ16{-3}};
  model_update(x, g, 1);
  EXPECT_EQ(x[0].raw, 70);
  EXPECT_EQ(x[1].raw, -4);

  std::vector<FixedQ16> y = {FixedQ16{0}};
  model_update(y, std::vector<FixedQ16>{FixedQ16{65536}}, 64);
  EXPECT_EQ(y[0].raw, -1024);

  std::vector<FixedQ16> z = {FixedQ16{42}};
  model_update(z, std::vector<FixedQ16>{FixedQ16{0}}, 8);
  EXPECT_EQ(z[0].raw, 42);
  EXPECT_THROW(model_update(z, std::vector<FixedQ16>{FixedQ16{0}}, 6), ConfigError);
}

LabeledData tiny_data() {
  std::vector<uint8_t> f = {255};
  LabeledData d{weave(f, 1, 1), {fx_from_real(1.0)}};
  return d;
}

TEST(ReferenceSgd, ZeroGammaKeepsModel) {
  auto data = tiny_data();
  SgdConfig cfg{.batch = 1, .precision = 8, .gamma = FixedQ16{0}, .epochs = 1};
  auto r = reference_sgd(data, cfg);
  for (auto v : r.model) EXPECT_EQ(v.raw, 0);
}

TEST(ReferenceSgd, SingleStepHandTrace) {
  // x0 = 0, a = 0, df = 0 - 1 = -65536, gamma = 0.5 -> scale = -32768,
  // g = floor(255 * -32768 / 256) = -32640, B = 1 -> x1 = 32640.
  auto data = tiny_data();
  SgdConfig cfg{.batch = 1, .precision = 8, .gamma = fx_from_real(0.5), .epochs = 1};
  auto r = reference_sgd(data, cfg);
  EXPECT_EQ(r.model[0].raw, 32640);
}

TEST(ReferenceSgd, TwoFeatureSeparableConverges) {
  std::mt19937_64 rng(8);
  std::vector<uint8_t> f;
  std::vector<FixedQ16> labels;
  for (int i = 0; i < 64; ++i) {
    const bool pos = i % 2;
    f.push_back(static_cast<uint8_t>(pos ? 180 + rng() % 60 : 20 + rng() % 60));
    f.push_back(static_cast<uint8_t>(pos ? 20 + rng() % 60 : 180 + rng() % 60));
    labels.push_back(pos ? fx_from_real(1.0) : FixedQ16{0});
  }
  LabeledData data{weave(f, 64, 2), labels};
  SgdConfig cfg{.batch = 8, .precision = 8, .gamma = fx_from_real(0.5), .epochs = 50};
  auto r = reference_sgd(data, cfg);
  EXPECT_LT(r.loss.back(), r.loss.front());
}

TEST(ReferenceSgd, LossReportingDoesNotChangeModel) {
  std::mt19937_64 rng(9);
  const auto f = random_features(rng, 32 * 100);
  std::vector<FixedQ16> labels(32);
  for (size_t i = 0; i < 32; ++i) labels[i] = FixedQ16{static_cast<int32_t>(i % 2) * 65536};
  LabeledData data{weave(f, 32, 100), labels};
  SgdConfig cfg{.batch = 8, .precision = 4, .gamma = FixedQ16{256}, .epochs = 3, .kind = LossKind::kLogistic};
  EXPECT_EQ(reference_sgd(data, cfg, true).model, reference_sgd(data, cfg, false).model);
}

}  // namespace
}  // namespace netagg
