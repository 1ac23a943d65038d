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

#include "pipeplan/compare.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "pipeplan/cost.hpp"
#include "pipeplan/gen.hpp"
#include "pipeplan/sim.hpp"

namespace pipeplan {

namespace {

int sim_count_for(int stage_count) { return std::max(100, 10 * stage_count); }

PlannerOutcome summarize(const ModelProfile &model, const DevicePool &pool,
                         const PlannerResult &result) {
  PlannerOutcome out;
  out.planner = result.planner;
  out.t_opt_s = result.t_opt_s;
  out.stage_count = static_cast<int>(result.plan.stages.size());
  for (const Stage &s : result.plan.stages) {
    out.devices_used.push_back(s.device_id);
  }
  out.wall_time_s = result.wall_time_s;
  out.states_explored = result.states_explored;

  SimConfig config;
  config.microbatch_count = sim_count_for(out.stage_count);
  config.microbatch_size = result.plan.microbatch_size;
  out.simulated_throughput =
      simulate(model, pool, result.plan, config).throughput_samples_per_s;
  return out;
}

} // namespace

CompareReport run_compare(const ModelProfile &model, const DevicePool &pool,
                          const Scenario &scenario, std::uint64_t seed,
                          int order_count) {
  model.validate();
  pool.validate();
  if (order_count < 1) {
    throw InvalidArgument("order_count must be >= 1");
  }

  CompareReport report;
  report.scenario = scenario.name;
  report.seed = seed;
  report.even_order_count = order_count;

  // All even orders are drawn once per report, independent of the microbatch
  // sweep, so the sequence of orders depends only on the seed.
  Rng rng(seed);
  int even_devices = std::min(pool.device_count(), model.layer_count());
  std::vector<std::vector<std::string>> orders;
  for (int i = 0; i < order_count; ++i) {
    std::vector<int> indices(static_cast<std::size_t>(pool.device_count()));
    std::iota(indices.begin(), indices.end(), 0);
    rng.shuffle(indices);
    std::vector<std::string> order;
    for (int d = 0; d < even_devices; ++d) {
      order.push_back(pool.device(indices[static_cast<std::size_t>(d)]).id);
    }
    orders.push_back(order);
  }

  for (int mb : scenario.microbatch_sizes) {
    CompareResult result;
    result.microbatch_size = mb;

    result.category_dp =
        summarize(model, pool, partition_category_dp(model, pool, mb));

    if (pool.device_count() <= kCompareNaiveDpMaxDevices) {
      result.naive_dp =
          summarize(model, pool, partition_naive_dp(model, pool, mb));
    } else {
      std::ostringstream os;
      os << pool.device_count() << " devices exceeds the naive-dp compare "
         << "limit of " << kCompareNaiveDpMaxDevices
         << "; category DP carries the optimum";
      result.naive_dp_skip_reason = os.str();
    }

    double sum = 0.0;
    for (const auto &order : orders) {
      EvenOrderOutcome outcome;
      outcome.order = order;
      PlannerResult even = partition_even(model, pool, order, mb);
      if (even.violations.empty()) {
        outcome.feasible = true;
        SimConfig config;
        config.microbatch_count =
            sim_count_for(static_cast<int>(even.plan.stages.size()));
        config.microbatch_size = mb;
        outcome.simulated_throughput =
            simulate(model, pool, even.plan, config).throughput_samples_per_s;
        ++result.even.feasible_orders;
        sum += outcome.simulated_throughput;
        if (result.even.feasible_orders == 1) {
          result.even.min_throughput = outcome.simulated_throughput;
          result.even.max_throughput = outcome.simulated_throughput;
        } else {
          result.even.min_throughput = std::min(
              result.even.min_throughput, outcome.simulated_throughput);
          result.even.max_throughput = std::max(
              result.even.max_throughput, outcome.simulated_throughput);
        }
      } else {
        outcome.violation_summary = describe(even.violations);
      }
      result.even.orders.push_back(std::move(outcome));
    }
    if (result.even.feasible_orders > 0) {
      result.even.mean_throughput =
          sum / static_cast<double>(result.even.feasible_orders);
    }

    report.results.push_back(std::move(result));
  }
  return report;
}

} // namespace pipeplan
