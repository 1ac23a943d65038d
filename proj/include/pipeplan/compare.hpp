/* Copyright 2026 the pipeplan authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pipeplan/partition.hpp"
#include "pipeplan/types.hpp"

namespace pipeplan {

struct Scenario {
  std::string name;
  std::string model_path; // resolved against the scenario file's directory
  std::string pool_path;
  std::vector<int> microbatch_sizes;
  std::string comment;
};

struct PlannerOutcome {
  std::string planner;
  double t_opt_s = 0.0;
  double simulated_throughput = 0.0;
  int stage_count = 0;
  std::vector<std::string> devices_used;
  double wall_time_s = 0.0;
  std::uint64_t states_explored = 0;
};

struct EvenOrderOutcome {
  std::vector<std::string> order; // truncated to min(D, L) devices
  bool feasible = false;
  double simulated_throughput = 0.0; // 0 when infeasible
  std::string violation_summary;
};

struct EvenBaselineSummary {
  std::vector<EvenOrderOutcome> orders;
  int feasible_orders = 0;
  double min_throughput = 0.0;
  double mean_throughput = 0.0;
  double max_throughput = 0.0;
};

struct CompareResult {
  int microbatch_size = 0;
  PlannerOutcome category_dp;
  std::optional<PlannerOutcome> naive_dp; // skipped on very large pools
  std::string naive_dp_skip_reason;
  EvenBaselineSummary even;
};

struct CompareReport {
  std::string scenario;
  std::uint64_t seed = 0;
  int even_order_count = 0;
  std::vector<CompareResult> results; // one per microbatch size
};

/// Naive DP joins the comparison only up to this pool size; beyond it the
/// subset table stops being desk-scale and category DP carries the optimum.
inline constexpr int kCompareNaiveDpMaxDevices = 12;

/// Runs category DP (and naive DP when tractable) once per microbatch size,
/// plus the even baseline over `order_count` seeded-random device orders, and
/// simulates every resulting feasible plan.
CompareReport run_compare(const ModelProfile &model, const DevicePool &pool,
                          const Scenario &scenario, std::uint64_t seed,
                          int order_count = 10);

} // namespace pipeplan
