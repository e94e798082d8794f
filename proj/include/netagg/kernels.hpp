// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "netagg/glm.hpp"

// Bit-serial forward/backward kernels over a WovenMatrix. The batch entry
// points come in two flavors: an OpenMP version (samples in parallel for the
// forward pass, 64-feature chunks in parallel for the backward pass) and a
// serial version kept as the reference in tests and benchmarks. Both produce
// bit-identical results because all accumulation is wrapping integer addition.
//
// No argument checking here; callers validate spans and precision.
namespace netagg::kernels {

int32_t dot_row(const WovenMatrix& woven, size_t sample, FeatureSpan span, std::span<const FixedQ16> weights,
                int s);

void accumulate_row(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t sample, FeatureSpan span,
                    FixedQ16 scale, int s);

// out[k] = dot_row(first + k) for k < count.
void forward_batch(const WovenMatrix& woven, size_t first, size_t count, FeatureSpan span,
                   std::span<const FixedQ16> weights, int s, std::span<int32_t> out);

// grad += sum over k < count of trunc_s(row first + k) * scales[k].
void backward_batch(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t first, size_t count,
                    FeatureSpan span, std::span<const FixedQ16> scales, int s);

// Worker threads used by the OpenMP kernels (1 when built without OpenMP).
int max_threads();

namespace serial {

void forward_batch(const WovenMatrix& woven, size_t first, size_t count, FeatureSpan span,
                   std::span<const FixedQ16> weights, int s, std::span<int32_t> out);

void backward_batch(std::span<FixedQ16> grad, const WovenMatrix& woven, size_t first, size_t count,
                    FeatureSpan span, std::span<const FixedQ16> scales, int s);

}  // namespace serial

}  // namespace netagg::kernels
