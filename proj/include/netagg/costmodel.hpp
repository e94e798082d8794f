// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>

namespace netagg::cost {

// Memory throughput (GB/s) measured for precision 1, 2, 3 and >= 4.
struct MemTable {
  std::array<double, 4> gbps = {10.2, 13.3, 13.8, 14.8};
};

struct CostParams {
  int64_t fpgas = 1;             // F
  int64_t engines = 1;           // G, per FPGA
  int64_t model_dim = 65536;     // M, features
  int64_t batch = 64;            // B, >= 8
  int precision = 4;             // s
  int64_t rtt_cycles = 1000;     // L_RTT
  double peak_gbps = 19.2;       // per engine, 512 bits per cycle
  MemTable mem;

  // Pipeline latency between dot product and model update: 40 + 2s cycles.
  int64_t pipeline_cycles() const { return 40 + 2 * static_cast<int64_t>(precision); }
};

// Throws std::invalid_argument on non-positive sizes, B < 8 or s < 1.
void validate(const CostParams& p);

// Cycles of useful work per mini-batch for one engine: (B/8) * ceil(M/(64 F G)) * s.
double work_cycles(const CostParams& p);

// Utilization of the compute pipeline given the work, pipeline latency and RTT.
double utilization(const CostParams& p);

double th_comp(const CostParams& p);
double th_mem(int precision, const MemTable& table = {});
double th_engine(const CostParams& p);
double th_all(const CostParams& p);

}  // namespace netagg::cost
