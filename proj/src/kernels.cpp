// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/kernels.hpp"

#include <array>
#include <bit>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace netagg::kernels {

namespace {

// Bits of `chunk` that fall inside `span`.
inline uint64_t chunk_mask(FeatureSpan span, size_t chunk) {
  const size_t lo = chunk * kChunkFeatures;
  const size_t from = span.begin > lo ? span.begin - lo : 0;
  const size_t to = span.end < lo + kChunkFeatures ? span.end - lo : kChunkFeatures;
  if (to <= from) return 0;
  const uint64_t upper = to == kChunkFeatures ? ~uint64_t{0} : ((uint64_t{1} << to) - 1);
  const uint64_t lower = (uint64_t{1} << from) - 1;
  return upper & ~lower;
}

inline size_t first_chunk(FeatureSpan span) { return span.begin / kChunkFeatures; }
inline size_t end_chunk(FeatureSpan span) { return (span.end + kChunkFeatures - 1) / kChunkFeatures; }

// One 64-lane bit-serial multiply: for every lane j with a set bit in plane p,
// acc[j] += value_j << (7 - p). The result per lane is trunc_s(feature) * value
// in Q16.24; the caller floors it to Q16.16.
template <typename ValueAt>
inline uint64_t multiply_chunk(const WovenMatrix& woven, size_t sample, size_t chunk, uint64_t mask, int s,
                               ValueAt value_at, std::array<int64_t, kChunkFeatures>& acc) {
  uint64_t touched = 0;
  for (int p = 0; p < s; ++p) {
    uint64_t bits = woven.plane(sample, chunk, p) & mask;
    touched |= bits;
    const int shift = kPlanes - 1 - p;
    while (bits != 0) {
      const int j = std::countr_zero(bits);
      bits &= bits - 1;
      acc[static_cast<size_t>(j)] += static_cast<int64_t>(value_at(j)) << shift;
    }
  }
  return touched;
}

inline void accumulate_chunk(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t sample, size_t chunk,
                             FeatureSpan span, FixedQ16 scale, int s) {
  if (scale.raw == 0) return;
  std::array<int64_t, kChunkFeatures> acc{};
  const uint64_t mask = chunk_mask(span, chunk);
  uint64_t touched = multiply_chunk(woven, sample, chunk, mask, s, [&](int) { return scale.raw; }, acc);
  const size_t base = chunk * kChunkFeatures - span.begin;
  while (touched != 0) {
    const int j = std::countr_zero(touched);
    touched &= touched - 1;
    auto& g = grad[base + static_cast<size_t>(j)];
    g.raw = wrap_add(g.raw, static_cast<int32_t>(acc[static_cast<size_t>(j)] >> FeatureU8::kBits));
  }
}

}  // namespace

int32_t dot_row(const WovenMatrix& woven, size_t sample, FeatureSpan span, std::span<const FixedQ16> weights,
                int s) {
  int32_t sum = 0;
  for (size_t c = first_chunk(span); c < end_chunk(span); ++c) {
    std::array<int64_t, kChunkFeatures> acc{};
    const size_t base = c * kChunkFeatures - span.begin;
    uint64_t touched = multiply_chunk(woven, sample, c, chunk_mask(span, c), s,
                                      [&](int j) { return weights[base + static_cast<size_t>(j)].raw; }, acc);
    while (touched != 0) {
      const int j = std::countr_zero(touched);
      touched &= touched - 1;
      sum = wrap_add(sum, static_cast<int32_t>(acc[static_cast<size_t>(j)] >> FeatureU8::kBits));
    }
  }
  return sum;
}

void accumulate_row(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t sample, FeatureSpan span,
                    FixedQ16 scale, int s) {
  for (size_t c = first_chunk(span); c < end_chunk(span); ++c) accumulate_chunk(grad, woven, sample, c, span, scale, s);
}

void forward_batch(const WovenMatrix& woven, size_t first, size_t count, FeatureSpan span,
                   std::span<const FixedQ16> weights, int s, std::span<int32_t> out) {
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    out[static_cast<size_t>(k)] = dot_row(woven, first + static_cast<size_t>(k), span, weights, s);
  }
}

void backward_batch(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t first, size_t count,
                    FeatureSpan span, std::span<const FixedQ16> scales, int s) {
  // Each thread owns whole chunks of `grad`, so no two threads touch one element.
  const auto c0 = static_cast<std::ptrdiff_t>(first_chunk(span));
  const auto c1 = static_cast<std::ptrdiff_t>(end_chunk(span));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = c0; c < c1; ++c) {
    for (size_t k = 0; k < count; ++k) {
      accumulate_chunk(grad, woven, first + k, static_cast<size_t>(c), span, scales[k], s);
    }
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void forward_batch(const WovenMatrix& woven, size_t first, size_t count, FeatureSpan span,
                   std::span<const FixedQ16> weights, int s, std::span<int32_t> out) {
  for (size_t k = 0; k < count; ++k) out[k] = dot_row(woven, first + k, span, weights, s);
}

void backward_batch(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t first, size_t count,
                    FeatureSpan span, std::span<const FixedQ16> scales, int s) {
  for (size_t k = 0; k < count; ++k) accumulate_row(grad, woven, first + k, span, scales[k], s);
}

}  // namespace serial

}  // namespace netagg::kernels
