// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>

namespace netagg {

class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Q16.16 signed fixed point. Add/sub wrap modulo 2^32; multiply keeps a
// 64-bit product and shifts right arithmetically (floor).
struct FixedQ16 {
  static constexpr int kFracBits = 16;
  static constexpr int32_t kOne = int32_t{1} << kFracBits;

  int32_t raw = 0;

  constexpr FixedQ16() = default;
  constexpr explicit FixedQ16(int32_t r) : raw(r) {}

  static constexpr FixedQ16 from_raw(int32_t r) { return FixedQ16{r}; }

  friend constexpr bool operator==(FixedQ16, FixedQ16) = default;
};

constexpr int32_t wrap_add(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) + static_cast<uint32_t>(b));
}

constexpr int32_t wrap_sub(int32_t a, int32_t b) {
  return static_cast<int32_t>(static_cast<uint32_t>(a) - static_cast<uint32_t>(b));
}

constexpr FixedQ16 operator+(FixedQ16 a, FixedQ16 b) { return FixedQ16{wrap_add(a.raw, b.raw)}; }
constexpr FixedQ16 operator-(FixedQ16 a, FixedQ16 b) { return FixedQ16{wrap_sub(a.raw, b.raw)}; }

constexpr FixedQ16& operator+=(FixedQ16& a, FixedQ16 b) {
  a = a + b;
  return a;
}

constexpr FixedQ16& operator-=(FixedQ16& a, FixedQ16 b) {
  a = a - b;
  return a;
}

constexpr FixedQ16 operator*(FixedQ16 a, FixedQ16 b) {
  const int64_t prod = static_cast<int64_t>(a.raw) * static_cast<int64_t>(b.raw);
  return FixedQ16{static_cast<int32_t>(static_cast<uint32_t>(static_cast<uint64_t>(prod >> FixedQ16::kFracBits)))};
}

// Rounds to nearest raw, ties away from zero. Throws OverflowError for |r| >= 32768.
FixedQ16 fx_from_real(double r);
double fx_to_real(FixedQ16 f);

// UQ0.8 feature in [0, 1 - 2^-8].
struct FeatureU8 {
  static constexpr int kBits = 8;
  uint8_t raw = 0;

  friend constexpr bool operator==(FeatureU8, FeatureU8) = default;
};

// Keeps the top `s` bits of an 8-bit feature.
constexpr uint8_t truncate_bits(uint8_t raw, int s) {
  return static_cast<uint8_t>(raw & static_cast<uint8_t>(0xFFu << (FeatureU8::kBits - s)));
}

// Feature (UQ0.8, already truncated) times a Q16.16 value, floor to Q16.16.
constexpr int32_t feature_mul(uint8_t feature_raw, int32_t q16) {
  const int64_t prod = static_cast<int64_t>(feature_raw) * static_cast<int64_t>(q16);
  return static_cast<int32_t>(prod >> FeatureU8::kBits);
}

}  // namespace netagg
