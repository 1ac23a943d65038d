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
#include <bit>
#include <chrono>
#include <numeric>
#include <sstream>

#include "cost_tables.hpp"
#include "pipeplan/cost.hpp"
#include "pipeplan/partition.hpp"

namespace pipeplan {

namespace detail {

std::string TightestMemoryBound::message() const {
  std::ostringstream os;
  os << "no memory-feasible assignment; tightest bound: layers " << first_layer
     << ".." << last_layer << " need " << needed << " bytes but device '"
     << device_id << "' has " << capacity;
  return os.str();
}

} // namespace detail

namespace {

// The naive table has (L+1) * 2^D * (D+1) slots; past this it is no longer a
// desk-scale tool and the category planner should be used instead.
constexpr int kMaxNaiveDevices = 16;
constexpr std::size_t kMaxNaiveTableSlots = std::size_t{1} << 25;

// Device indices in id-sorted order fix the iteration order, and with
// strict-improvement updates make tie-breaking reproducible.
std::vector<int> id_sorted_indices(const DevicePool &pool) {
  std::vector<int> order(static_cast<std::size_t>(pool.device_count()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&pool](int a, int b) {
    return pool.device(a).id < pool.device(b).id;
  });
  return order;
}

std::vector<std::string> stage_device_ids(const Plan &plan) {
  std::vector<std::string> ids;
  ids.reserve(plan.stages.size());
  for (const Stage &s : plan.stages) {
    ids.push_back(s.device_id);
  }
  return ids;
}

} // namespace

NaiveDpRun run_naive_dp(const ModelProfile &model, const DevicePool &pool,
                        int microbatch_size) {
  model.validate();
  pool.validate();
  if (microbatch_size < 1) {
    throw InvalidArgument("microbatch_size must be >= 1");
  }

  int layer_count = model.layer_count();
  int device_count = pool.device_count();
  if (device_count > kMaxNaiveDevices) {
    std::ostringstream os;
    os << "naive DP refuses " << device_count << " devices (max "
       << kMaxNaiveDevices << "); use the category planner";
    throw RefusedScaleError(os.str());
  }
  std::size_t slots = static_cast<std::size_t>(layer_count + 1) *
                      (std::size_t{1} << device_count) *
                      static_cast<std::size_t>(device_count + 1);
  if (slots > kMaxNaiveTableSlots) {
    std::ostringstream os;
    os << "naive DP memo table would need " << slots
       << " slots; use the category planner";
    throw RefusedScaleError(os.str());
  }

  detail::CostTables costs(model, pool, microbatch_size);
  detail::TightestMemoryBound tightest;

  NaiveDpRun run;
  run.table.layer_count = layer_count;
  run.table.device_count = device_count;
  run.table.h.assign(slots, DpTable::kUnreached);
  run.table.precursor.assign(slots, {});
  DpTable &table = run.table;
  int sentinel = table.terminal_sentinel();

  // Nothing processed yet: zero cost whatever device comes next.
  for (int u = 0; u <= device_count; ++u) {
    table.h[table.key(0, 0u, u)] = 0.0;
  }

  std::vector<int> order = id_sorted_indices(pool);
  std::uint32_t full = (device_count >= 32)
                           ? ~0u
                           : ((std::uint32_t{1} << device_count) - 1u);

  for (int done = 0; done < layer_count; ++done) {
    for (std::uint32_t used = 0; used <= full; ++used) {
      // A pipeline that finished `done` layers uses at most `done` devices.
      if (std::popcount(used) > done) {
        continue;
      }
      for (int u : order) {
        if (used & (std::uint32_t{1} << u)) {
          continue;
        }
        double base = table.h[table.key(done, used, u)];
        if (base == DpTable::kUnreached) {
          continue;
        }
        const Device &dev = pool.device(u);
        std::uint32_t used_with_u = used | (std::uint32_t{1} << u);
        for (int j = done + 1; j <= layer_count; ++j) {
          std::int64_t need = costs.range_memory(done + 1, j);
          if (need > dev.memory_bytes) {
            tightest.record(need, dev.memory_bytes, done + 1, j, dev.id);
            break; // memory is monotone in j
          }
          double comp = costs.stage_comp(u, done + 1, j);
          if (j == layer_count) {
            ++run.states_explored;
            double candidate = std::max(base, comp); // no successor transfer
            std::size_t slot = table.key(j, used_with_u, sentinel);
            if (candidate < table.h[slot]) {
              table.h[slot] = candidate;
              table.precursor[slot] = {static_cast<std::int16_t>(done),
                                       static_cast<std::int16_t>(u)};
            }
            continue;
          }
          for (int v : order) {
            if (v == u || (used & (std::uint32_t{1} << v))) {
              continue;
            }
            ++run.states_explored;
            double candidate =
                std::max(std::max(base, comp), costs.stage_comm(u, v, j));
            std::size_t slot = table.key(j, used_with_u, v);
            if (candidate < table.h[slot]) {
              table.h[slot] = candidate;
              table.precursor[slot] = {static_cast<std::int16_t>(done),
                                       static_cast<std::int16_t>(u)};
            }
          }
        }
      }
    }
  }

  // Terminal selection: best period, then fewest devices; equal sets are
  // settled later by comparing reconstructed device-id sequences.
  run.t_opt = DpTable::kUnreached;
  int best_size = device_count + 1;
  for (std::uint32_t used = 1; used <= full; ++used) {
    double value = table.h[table.key(layer_count, used, sentinel)];
    if (value == DpTable::kUnreached) {
      continue;
    }
    int size = std::popcount(used);
    if (value < run.t_opt || (value == run.t_opt && size < best_size)) {
      run.t_opt = value;
      run.best_terminal_set = used;
      best_size = size;
    }
  }
  if (run.t_opt == DpTable::kUnreached) {
    if (tightest.seen) {
      throw InfeasibleError(tightest.message());
    }
    throw InternalError("DP found no terminal state and no memory bound");
  }

  // Among equal-period, equal-size terminals pick the lexicographically
  // smallest device-id sequence.
  Plan best_plan = reconstruct_strategy(table, model, pool,
                                        run.best_terminal_set, microbatch_size);
  std::vector<std::string> best_ids = stage_device_ids(best_plan);
  for (std::uint32_t used = 1; used <= full; ++used) {
    if (used == run.best_terminal_set) {
      continue;
    }
    if (table.h[table.key(layer_count, used, sentinel)] != run.t_opt ||
        std::popcount(used) != best_size) {
      continue;
    }
    Plan candidate =
        reconstruct_strategy(table, model, pool, used, microbatch_size);
    std::vector<std::string> ids = stage_device_ids(candidate);
    if (ids < best_ids) {
      best_ids = ids;
      run.best_terminal_set = used;
    }
  }
  return run;
}

Plan reconstruct_strategy(const DpTable &table, const ModelProfile &model,
                          const DevicePool &pool, std::uint32_t used_set,
                          int microbatch_size) {
  int sentinel = table.terminal_sentinel();
  if (table.value(table.layer_count, used_set, sentinel) ==
      DpTable::kUnreached) {
    throw InvalidArgument("terminal entry was never reached");
  }

  Plan plan;
  plan.microbatch_size = microbatch_size;

  int done = table.layer_count;
  std::uint32_t used = used_set;
  int next = sentinel;
  while (done > 0) {
    DpTable::Precursor back = table.precursor[table.key(done, used, next)];
    if (!back.valid()) {
      throw InternalError("broken precursor chain at " + std::to_string(done) +
                          " layers");
    }
    int dev = back.prev_device;
    std::uint32_t bit = std::uint32_t{1} << dev;
    if (!(used & bit) || back.prev_layers >= done) {
      throw InternalError("precursor does not shrink the DP state");
    }
    Stage stage;
    stage.device_id = pool.device(dev).id;
    stage.first_layer = back.prev_layers + 1;
    stage.last_layer = done;
    plan.stages.push_back(stage);

    done = back.prev_layers;
    used &= ~bit;
    next = dev;
  }
  if (used != 0) {
    throw InternalError("precursor chain left devices unaccounted for");
  }
  std::reverse(plan.stages.begin(), plan.stages.end());

  plan.predicted_period_s = plan_period(model, pool, plan);
  plan.predicted_throughput =
      static_cast<double>(microbatch_size) / plan.predicted_period_s;
  return plan;
}

PlannerResult partition_naive_dp(const ModelProfile &model,
                                 const DevicePool &pool, int microbatch_size) {
  auto start = std::chrono::steady_clock::now();
  NaiveDpRun run = run_naive_dp(model, pool, microbatch_size);
  PlannerResult result;
  result.plan = reconstruct_strategy(run.table, model, pool,
                                     run.best_terminal_set, microbatch_size);
  result.t_opt_s = result.plan.predicted_period_s;
  result.planner = "naive_dp";
  result.states_explored = run.states_explored;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

} // namespace pipeplan
