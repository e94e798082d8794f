// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace netagg {

namespace {

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string at_line(size_t line) { return " at line " + std::to_string(line); }

}  // namespace

SparseDataset parse_libsvm(std::istream& in) {
  SparseDataset ds;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line

    SparseRow row;
    if (!parse_double(tok, row.label)) throw ParseError("non-numeric label '" + tok + "'" + at_line(lineno), lineno);
    size_t prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0) throw ParseError("malformed entry '" + tok + "'" + at_line(lineno), lineno);
      size_t idx = 0;
      const std::string_view idx_sv(tok.data(), colon);
      auto [ptr, ec] = std::from_chars(idx_sv.data(), idx_sv.data() + idx_sv.size(), idx);
      if (ec != std::errc{} || ptr != idx_sv.data() + idx_sv.size() || idx == 0) {
        throw ParseError("bad feature index '" + tok + "'" + at_line(lineno), lineno);
      }
      double v = 0.0;
      if (!parse_double(std::string_view(tok).substr(colon + 1), v)) {
        throw ParseError("bad feature value '" + tok + "'" + at_line(lineno), lineno);
      }
      if (idx <= prev) throw ParseError("feature indices not increasing" + at_line(lineno), lineno);
      prev = idx;
      row.entries.emplace_back(idx - 1, v);
      ds.features = std::max(ds.features, idx);
    }
    ds.rows.push_back(std::move(row));
  }
  if (ds.rows.empty()) throw DataError("empty dataset");
  return ds;
}

SparseDataset parse_libsvm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset not found: " + path.string());
  return parse_libsvm(in);
}

LabeledData Dataset::woven() const { return {weave(features_u8, samples, features), labels}; }

Dataset normalize_quantize(const SparseDataset& sparse, LossKind kind) {
  if (sparse.rows.empty()) throw DataError("empty dataset");
  const size_t s = sparse.rows.size();
  const size_t d = sparse.features;

  std::vector<double> dense(s * d, 0.0);
  for (size_t i = 0; i < s; ++i) {
    for (const auto& [j, v] : sparse.rows[i].entries) {
      if (!std::isfinite(v)) throw DataError("non-finite feature value in sample " + std::to_string(i));
      if (j >= d) throw DataError("feature index beyond dataset width");
      dense[i * d + j] = v;
    }
  }

  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (size_t i = 0; i < s; ++i) {
    for (size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], dense[i * d + j]);
      hi[j] = std::max(hi[j], dense[i * d + j]);
    }
  }

  Dataset out;
  out.samples = s;
  out.features = d;
  out.features_u8.assign(s * d, 0);
  constexpr double kTop = 255.0 / 256.0;
  for (size_t j = 0; j < d; ++j) {
    const double range = hi[j] - lo[j];
    if (!(range > 0)) continue;  // constant feature
    for (size_t i = 0; i < s; ++i) {
      const double scaled = (dense[i * d + j] - lo[j]) / range * kTop;
      const double r = std::floor(scaled * 256.0 + 0.5);
      out.features_u8[i * d + j] = static_cast<uint8_t>(std::clamp(r, 0.0, 255.0));
    }
  }

  out.labels.reserve(s);
  for (size_t i = 0; i < s; ++i) {
    double b = sparse.rows[i].label;
    if (!std::isfinite(b)) throw DataError("non-finite label in sample " + std::to_string(i));
    if (kind == LossKind::kLogistic) {
      if (b == -1.0) b = 0.0;
      if (b != 0.0 && b != 1.0) throw DataError("logistic labels must be -1/+1 or 0/1");
    } else {
      b = std::clamp(b, -32767.0, 32767.0);
    }
    out.labels.push_back(fx_from_real(b));
  }
  return out;
}

SparseDataset to_sparse(const Dataset& data) {
  SparseDataset sp;
  sp.features = data.features;
  sp.rows.resize(data.samples);
  for (size_t i = 0; i < data.samples; ++i) {
    sp.rows[i].label = fx_to_real(data.labels[i]);
    for (size_t j = 0; j < data.features; ++j) {
      const uint8_t v = data.features_u8[i * data.features + j];
      if (v != 0) sp.rows[i].entries.emplace_back(j, static_cast<double>(v) / 256.0);
    }
  }
  return sp;
}

PartitionPlan plan_partitions(size_t features, size_t samples, size_t workers, size_t engines, PartitionMode mode) {
  PartitionPlan plan;
  plan.mode = mode;
  if (workers == 0 || (mode == PartitionMode::kModel && engines == 0)) throw PartitionError("zero partitions");

  if (mode == PartitionMode::kData) {
    if (samples < workers) throw PartitionError("fewer samples than workers");
    const size_t base = samples / workers;
    const size_t rem = samples % workers;
    size_t at = 0;
    for (size_t m = 0; m < workers; ++m) {
      const size_t len = base + (m < rem ? 1 : 0);
      plan.spans.push_back({at, at + len});
      at += len;
    }
    return plan;
  }

  const size_t parts = workers * engines;
  const size_t chunks = (features + kChunkFeatures - 1) / kChunkFeatures;
  if (chunks < parts) {
    throw PartitionError(std::to_string(features) + " features cannot feed " + std::to_string(parts) +
                         " engines (need at least 64 each)");
  }
  const size_t base = chunks / parts;
  const size_t rem = chunks % parts;
  size_t at = 0;
  for (size_t k = 0; k < parts; ++k) {
    const size_t len = (base + (k < rem ? 1 : 0)) * kChunkFeatures;
    plan.spans.push_back({at, std::min(at + len, features)});
    at += len;
  }
  return plan;
}

SparseDataset make_synthetic(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  // Box-Muller on our own uniforms keeps the stream identical across standard libraries.
  auto gaussian = [&] {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };

  SparseDataset ds;
  ds.features = spec.features;
  ds.rows.resize(spec.samples);
  const size_t half = spec.features / 2;
  for (size_t i = 0; i < spec.samples; ++i) {
    auto& row = ds.rows[i];
    const bool positive = (rng() & 1u) != 0;
    row.label = positive ? 1.0 : 0.0;
    const double shift = (positive ? 0.5 : -0.5) * spec.margin;
    row.entries.reserve(spec.features);
    for (size_t j = 0; j < spec.features; ++j) {
      const double mean = 0.5 + (j < half ? shift : -shift);
      row.entries.emplace_back(j, mean + spec.noise * gaussian());
    }
  }
  return ds;
}

}  // namespace netagg
