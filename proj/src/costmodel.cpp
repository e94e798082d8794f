// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include "netagg/costmodel.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace netagg::cost {

void validate(const CostParams& p) {
  if (p.fpgas < 1 || p.engines < 1) throw std::invalid_argument("F and G must be positive");
  if (p.model_dim < 1) throw std::invalid_argument("model dimension must be positive");
  if (p.batch < 8) throw std::invalid_argument("mini-batch must be at least 8 (one sample per bank)");
  if (p.precision < 1) throw std::invalid_argument("precision must be >= 1");
  if (p.rtt_cycles < 0 || p.peak_gbps <= 0) throw std::invalid_argument("invalid latency or peak throughput");
}

double work_cycles(const CostParams& p) {
  const int64_t lanes = 64 * p.fpgas * p.engines;
  const int64_t per_engine_chunks = (p.model_dim + lanes - 1) / lanes;
  return (static_cast<double>(p.batch) / 8.0) * static_cast<double>(per_engine_chunks) * p.precision;
}

double utilization(const CostParams& p) {
  validate(p);
  const double work = work_cycles(p);
  return work / (work + static_cast<double>(p.pipeline_cycles()) + static_cast<double>(p.rtt_cycles));
}

double th_comp(const CostParams& p) { return utilization(p) * p.peak_gbps; }

double th_mem(int precision, const MemTable& table) {
  if (precision < 1) throw std::invalid_argument("precision " + std::to_string(precision) + " must be >= 1");
  return table.gbps[static_cast<size_t>(std::min(precision, 4) - 1)];
}

double th_engine(const CostParams& p) { return std::min(th_comp(p), th_mem(p.precision, p.mem)); }

double th_all(const CostParams& p) {
  return th_engine(p) * static_cast<double>(p.fpgas) * static_cast<double>(p.engines);
}

}  // namespace netagg::cost
