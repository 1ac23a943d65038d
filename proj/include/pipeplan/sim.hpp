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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pipeplan/partition.hpp"
#include "pipeplan/types.hpp"

namespace pipeplan {

struct SimConfig {
  int microbatch_count = 1;
  int microbatch_size = 1;
  /// Leading microbatches excluded from steady-state measurement. Defaults to
  /// the stage count (the pipeline fill depth). Steady-state metrics need at
  /// least two post-warmup completions.
  std::optional<int> warmup_exclusion;
};

/// Numeric order doubles as the tie rank at equal timestamps.
enum class SimEventKind {
  SendEnd = 0,
  ComputeEnd = 1,
  ComputeStart = 2,
  SendStart = 3,
};

std::string to_string(SimEventKind kind);

struct SimEvent {
  SimEventKind kind;
  int stage_index;      // 0-based pipeline position
  int microbatch_index; // 0-based
  double timestamp_s;
};

struct SimReport {
  std::vector<SimEvent> events; // in emission order
  double makespan_s = 0.0;
  double steady_period_s = 0.0;
  double throughput_samples_per_s = 0.0;
  std::vector<double> stage_busy_fraction;
  int microbatch_count = 0;
  int microbatch_size = 0;
  int warmup_exclusion = 0;
};

/// Deterministic discrete-event run of `plan` over a stream of microbatches.
///
/// Rules: a stage computes one microbatch at a time in FIFO order; on
/// compute-end it hands the output to its egress link and may start the next
/// queued microbatch immediately (compute and send fully overlap); each link
/// transmits one microbatch at a time, FIFO, costing t_comm; a stage may start
/// a microbatch only after its receive completed and its previous compute
/// ended; the final stage never sends. Input delivery to stage 0 is free.
///
/// Events that fall on the same timestamp are processed (and logged) in
/// SimEventKind order, then by stage index, then by microbatch index; causal
/// chains of zero-duration steps still log cause before effect.
///
/// Throws InfeasibleError when the plan fails validate_plan.
SimReport simulate(const ModelProfile &model, const DevicePool &pool,
                   const Plan &plan, const SimConfig &config);

struct SteadyStateCheck {
  double analytic_period_s = 0.0;
  double simulated_period_s = 0.0;
  double relative_error = 0.0;
};

/// Compares plan_period against the simulated steady period. Requires
/// config.microbatch_count >= 10 * stage count.
SteadyStateCheck steady_state_check(const ModelProfile &model,
                                    const DevicePool &pool, const Plan &plan,
                                    const SimConfig &config);

struct SweepPoint {
  int microbatch_size = 0;
  double t_opt_s = 0.0;
  double predicted_throughput = 0.0;
  double simulated_throughput = 0.0;
};

using PlannerFn = std::function<PlannerResult(
    const ModelProfile &, const DevicePool &, int microbatch_size)>;

/// Re-plans and simulates at each microbatch size (the optimum may change
/// with the size). `microbatch_count` microbatches are streamed per point.
std::vector<SweepPoint> sweep_microbatch(const ModelProfile &model,
                                         const DevicePool &pool,
                                         const PlannerFn &planner,
                                         const std::vector<int> &sizes,
                                         int microbatch_count = 100);

} // namespace pipeplan
