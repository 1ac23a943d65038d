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

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <sstream>

#include "cost_tables.hpp"
#include "pipeplan/cost.hpp"
#include "pipeplan/partition.hpp"

namespace pipeplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exhaustive walk over (ordered device sequence, composition) pairs. Stage s
// is priced once its successor device is known; the final stage has no
// outbound transfer. Candidates are visited with the stage count ascending
// and device choices in id order, so accepting strict improvements only
// yields the fewest-devices, lexicographically-smallest optimum.
struct Search {
  Search(const ModelProfile &m, const DevicePool &p,
         const detail::CostTables &c)
      : model(m), pool(p), costs(c) {}

  const ModelProfile &model;
  const DevicePool &pool;
  const detail::CostTables &costs;
  std::vector<int> order; // id-sorted device indices

  std::uint64_t candidates = 0;
  double best = kInf;
  std::vector<int> best_devices;
  std::vector<int> best_ends;
  detail::TightestMemoryBound tightest;

  std::vector<bool> used;
  std::vector<int> devices; // per stage, device index
  std::vector<int> ends;    // per stage, last layer

  bool has_deadline = false;
  std::chrono::steady_clock::time_point deadline;
  double budget_s = 0.0;

  void check_deadline() {
    if (has_deadline && std::chrono::steady_clock::now() > deadline) {
      std::ostringstream os;
      os << "brute force exceeded its time budget of " << budget_s
         << " s after " << candidates << " candidates";
      throw RefusedScaleError(os.str());
    }
  }

  // acc: max period over stages before the previous one; prev_comp: compute
  // time of the previous stage, whose transfer cost is still pending.
  void place_stage(int stage, int stage_count, int layers_done, double acc,
                   double prev_comp, int prev_dev) {
    int remaining_after = stage_count - stage - 1;
    int last_end = model.layer_count() - remaining_after;
    for (int v : order) {
      if (used[static_cast<std::size_t>(v)]) {
        continue;
      }
      double acc_with_prev = acc;
      if (stage > 0) {
        acc_with_prev = std::max(
            acc, std::max(prev_comp,
                          costs.stage_comm(prev_dev, v, layers_done)));
      }
      const Device &dev = pool.device(v);
      used[static_cast<std::size_t>(v)] = true;
      devices[static_cast<std::size_t>(stage)] = v;
      int first_end = (stage == stage_count - 1) ? last_end : layers_done + 1;
      for (int end = first_end; end <= last_end; ++end) {
        std::int64_t need = costs.range_memory(layers_done + 1, end);
        if (need > dev.memory_bytes) {
          tightest.record(need, dev.memory_bytes, layers_done + 1, end,
                          dev.id);
          break; // larger ranges only need more
        }
        double comp = costs.stage_comp(v, layers_done + 1, end);
        ends[static_cast<std::size_t>(stage)] = end;
        if (stage == stage_count - 1) {
          ++candidates;
          if ((candidates & 0xfff) == 0) {
            check_deadline();
          }
          double total = std::max(acc_with_prev, comp);
          if (total < best) {
            best = total;
            best_devices.assign(devices.begin(),
                                devices.begin() + stage_count);
            best_ends.assign(ends.begin(), ends.begin() + stage_count);
          }
        } else {
          place_stage(stage + 1, stage_count, end, acc_with_prev, comp, v);
        }
      }
      used[static_cast<std::size_t>(v)] = false;
    }
  }
};

} // namespace

PlannerResult partition_brute_force(const ModelProfile &model,
                                    const DevicePool &pool,
                                    int microbatch_size,
                                    const BruteForceLimits &limits) {
  auto start = std::chrono::steady_clock::now();
  model.validate();
  pool.validate();
  if (microbatch_size < 1) {
    throw InvalidArgument("microbatch_size must be >= 1");
  }

  int device_count = pool.device_count();
  int layer_count = model.layer_count();
  if (device_count > limits.max_devices || layer_count > limits.max_layers) {
    std::ostringstream os;
    os << "brute force refused: " << device_count << " devices x "
       << layer_count << " layers exceeds limits (" << limits.max_devices
       << " devices, " << limits.max_layers << " layers)";
    throw RefusedScaleError(os.str());
  }

  detail::CostTables costs(model, pool, microbatch_size);
  Search search(model, pool, costs);
  search.order.resize(static_cast<std::size_t>(device_count));
  std::iota(search.order.begin(), search.order.end(), 0);
  std::sort(search.order.begin(), search.order.end(), [&pool](int a, int b) {
    return pool.device(a).id < pool.device(b).id;
  });
  search.used.assign(static_cast<std::size_t>(device_count), false);
  search.devices.assign(static_cast<std::size_t>(device_count), -1);
  search.ends.assign(static_cast<std::size_t>(device_count), -1);
  if (limits.time_budget_s > 0) {
    search.has_deadline = true;
    search.budget_s = limits.time_budget_s;
    search.deadline = start + std::chrono::duration_cast<
                                  std::chrono::steady_clock::duration>(
                                  std::chrono::duration<double>(
                                      limits.time_budget_s));
  }

  int max_stages = std::min(device_count, layer_count);
  for (int stage_count = 1; stage_count <= max_stages; ++stage_count) {
    search.check_deadline();
    search.place_stage(0, stage_count, 0, 0.0, 0.0, -1);
  }

  if (search.best == kInf) {
    if (search.tightest.seen) {
      throw InfeasibleError(search.tightest.message());
    }
    throw InternalError("brute force found no candidate");
  }

  PlannerResult result;
  result.planner = "brute_force";
  result.states_explored = search.candidates;
  result.plan.microbatch_size = microbatch_size;
  int first = 1;
  for (std::size_t s = 0; s < search.best_devices.size(); ++s) {
    Stage stage;
    stage.device_id = pool.device(search.best_devices[s]).id;
    stage.first_layer = first;
    stage.last_layer = search.best_ends[s];
    first = stage.last_layer + 1;
    result.plan.stages.push_back(stage);
  }
  result.plan.predicted_period_s = plan_period(model, pool, result.plan);
  result.plan.predicted_throughput = static_cast<double>(microbatch_size) /
                                     result.plan.predicted_period_s;
  result.t_opt_s = result.plan.predicted_period_s;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

PlannerResult partition_even(const ModelProfile &model, const DevicePool &pool,
                             const std::vector<std::string> &device_order,
                             int microbatch_size) {
  auto start = std::chrono::steady_clock::now();
  model.validate();
  pool.validate();
  if (microbatch_size < 1) {
    throw InvalidArgument("microbatch_size must be >= 1");
  }
  if (device_order.empty()) {
    throw InvalidArgument("even partition needs a non-empty device order");
  }
  int stage_count = static_cast<int>(device_order.size());
  int layer_count = model.layer_count();
  if (stage_count > layer_count) {
    std::ostringstream os;
    os << "even partition over " << stage_count << " devices needs at most "
       << layer_count << " (one layer per stage)";
    throw InvalidArgument(os.str());
  }
  std::vector<int> indices;
  for (const std::string &id : device_order) {
    int idx = pool.index_of(id);
    if (idx < 0) {
      throw InvalidArgument("device '" + id + "' not in pool");
    }
    if (std::find(indices.begin(), indices.end(), idx) != indices.end()) {
      throw InvalidArgument("device '" + id + "' listed twice");
    }
    indices.push_back(idx);
  }

  PlannerResult result;
  result.planner = "even";
  result.plan.microbatch_size = microbatch_size;
  int base = layer_count / stage_count;
  int remainder = layer_count % stage_count;
  int first = 1;
  for (int s = 0; s < stage_count; ++s) {
    int size = base + (s < remainder ? 1 : 0); // larger parts go first
    Stage stage;
    stage.device_id = pool.device(indices[static_cast<std::size_t>(s)]).id;
    stage.first_layer = first;
    stage.last_layer = first + size - 1;
    first = stage.last_layer + 1;
    result.plan.stages.push_back(stage);
  }

  result.violations = validate_plan(model, pool, result.plan);
  result.plan.predicted_period_s =
      plan_period_unchecked(model, pool, result.plan);
  result.plan.predicted_throughput = static_cast<double>(microbatch_size) /
                                     result.plan.predicted_period_s;
  result.t_opt_s = result.plan.predicted_period_s;
  result.states_explored = 1;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

} // namespace pipeplan
