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
#include <limits>
#include <string>
#include <vector>

#include "pipeplan/types.hpp"

namespace pipeplan {

struct PlannerResult {
  Plan plan;
  double t_opt_s = 0.0; // always recomputed from the plan, never copied
  std::string planner;
  double wall_time_s = 0.0;
  std::uint64_t states_explored = 0;
  std::vector<Violation> violations; // only the even baseline may carry any
};

/// Memo table for the subset DP. h(i, used, u) is the best bottleneck period
/// over pipelines that process the first `i` layers with the device set
/// `used`, where `u` is the device that will run the next stage. Terminal
/// entries are keyed with u == device_count() (the no-successor sentinel) at
/// i == L, in which case `used` already contains the final stage's device.
struct DpTable {
  static constexpr double kUnreached = std::numeric_limits<double>::infinity();

  struct Precursor {
    std::int16_t prev_layers = -1;
    std::int16_t prev_device = -1;
    bool valid() const { return prev_layers >= 0; }
  };

  int layer_count = 0;
  int device_count = 0;
  std::vector<double> h;
  std::vector<Precursor> precursor;

  std::size_t key(int layers_done, std::uint32_t used, int next_device) const {
    return (static_cast<std::size_t>(layers_done) << device_count | used) *
               static_cast<std::size_t>(device_count + 1) +
           static_cast<std::size_t>(next_device);
  }
  int terminal_sentinel() const { return device_count; }
  double value(int layers_done, std::uint32_t used, int next_device) const {
    return h[key(layers_done, used, next_device)];
  }
};

/// Raw outcome of the subset DP, before strategy reconstruction.
struct NaiveDpRun {
  DpTable table;
  double t_opt = DpTable::kUnreached;
  std::uint32_t best_terminal_set = 0; // the `used` mask of the chosen terminal
  std::uint64_t states_explored = 0;
};

/// Fills the table and picks the best terminal entry. Ties prefer fewer
/// devices, then the lexicographically smallest device-id sequence (per-state
/// ties inside the table keep the first candidate in canonical iteration
/// order: id-sorted devices, ascending masks and layer indices).
/// Throws InfeasibleError when no assignment fits in memory, naming the
/// tightest memory bound encountered.
NaiveDpRun run_naive_dp(const ModelProfile &model, const DevicePool &pool,
                        int microbatch_size);

/// Walks precursor links from the terminal entry (L, used_set, sentinel) back
/// to (0, empty), emitting stages in pipeline order. Throws InternalError on a
/// broken precursor chain.
Plan reconstruct_strategy(const DpTable &table, const ModelProfile &model,
                          const DevicePool &pool, std::uint32_t used_set,
                          int microbatch_size);

/// Optimal partition over all device subsets, orders and contiguous splits.
/// Exact but exponential in the device count; refuses pools whose memo table
/// would not fit (use partition_category_dp for large pools of repeated
/// hardware).
PlannerResult partition_naive_dp(const ModelProfile &model,
                                 const DevicePool &pool, int microbatch_size);

/// Device counts per category. counts[c] never exceeds the pool's member
/// count for category c.
struct CategoryState {
  std::vector<int> counts;
};

/// Same optimum as partition_naive_dp, computed over per-category use counts
/// instead of device subsets. Requires pool.validate()'s category invariant;
/// the returned plan maps stages onto concrete devices in id order.
PlannerResult partition_category_dp(const ModelProfile &model,
                                    const DevicePool &pool,
                                    int microbatch_size);

struct BruteForceLimits {
  int max_devices = 5;
  int max_layers = 8;
  double time_budget_s = 0.0; // 0 means no budget
};

/// Exhaustive search over every ordered device sequence and every composition
/// of the layers into that many contiguous parts. states_explored counts the
/// candidates reached (equals the closed-form search-space size when memory
/// never prunes). Throws RefusedScaleError beyond `limits` or past the time
/// budget.
PlannerResult partition_brute_force(const ModelProfile &model,
                                    const DevicePool &pool,
                                    int microbatch_size,
                                    const BruteForceLimits &limits = {});

/// GPipe-style even split: ceil(L/k) layers per stage for the first L mod k
/// stages, floor(L/k) for the rest, devices taken in the given order. The
/// result is returned even when memory-infeasible, with the violation list
/// attached.
PlannerResult partition_even(const ModelProfile &model, const DevicePool &pool,
                             const std::vector<std::string> &device_order,
                             int microbatch_size);

} // namespace pipeplan
