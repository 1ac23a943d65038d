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
#include <sstream>

#include "cost_tables.hpp"
#include "pipeplan/cost.hpp"
#include "pipeplan/partition.hpp"

namespace pipeplan {

namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxCategoryTableSlots = std::size_t{1} << 25;

struct Groups {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> members; // device indices, id-sorted
  std::vector<int> capacity;             // n_i per category
  std::vector<std::size_t> stride;       // mixed-radix strides for counts
  std::size_t state_count = 1;

  int category_count() const { return static_cast<int>(labels.size()); }
};

Groups make_groups(const DevicePool &pool) {
  Groups g;
  for (auto &[label, members] : pool.categories()) {
    g.labels.push_back(label);
    g.members.push_back(members);
    g.capacity.push_back(static_cast<int>(members.size()));
  }
  g.stride.resize(g.labels.size());
  for (std::size_t c = 0; c < g.labels.size(); ++c) {
    g.stride[c] = g.state_count;
    g.state_count *= static_cast<std::size_t>(g.capacity[c] + 1);
  }
  return g;
}

// Category-level cost views. Members of one category are interchangeable
// (enforced by pool validation), so a representative pair prices any pair.
struct CategoryCosts {
  const detail::CostTables &tables;
  const Groups &groups;

  double comp(int cat, int first, int last) const {
    return tables.stage_comp(groups.members[static_cast<std::size_t>(cat)][0],
                             first, last);
  }
  double comm(int from_cat, int to_cat, int boundary) const {
    const auto &from = groups.members[static_cast<std::size_t>(from_cat)];
    const auto &to = groups.members[static_cast<std::size_t>(to_cat)];
    int sender = from[0];
    int receiver = (from_cat == to_cat) ? to[1] : to[0];
    return tables.stage_comm(sender, receiver, boundary);
  }
};

struct CategoryTable {
  int layer_count = 0;
  int category_count = 0;
  std::size_t state_count = 0;
  std::vector<double> h;
  struct Precursor {
    std::int16_t prev_layers = -1;
    std::int16_t prev_category = -1;
    bool valid() const { return prev_layers >= 0; }
  };
  std::vector<Precursor> precursor;

  // u == category_count is the terminal sentinel
  std::size_t key(int layers_done, std::size_t counts_idx, int next_cat) const {
    return (static_cast<std::size_t>(layers_done) * state_count + counts_idx) *
               static_cast<std::size_t>(category_count + 1) +
           static_cast<std::size_t>(next_cat);
  }
};

CategoryState decode_counts(const Groups &g, std::size_t idx) {
  CategoryState state;
  state.counts.resize(g.labels.size());
  for (std::size_t c = 0; c < g.labels.size(); ++c) {
    state.counts[c] =
        static_cast<int>(idx % static_cast<std::size_t>(g.capacity[c] + 1));
    idx /= static_cast<std::size_t>(g.capacity[c] + 1);
  }
  return state;
}

struct CategoryRun {
  CategoryTable table;
  double t_opt = kUnreached;
  std::size_t best_counts_idx = 0;
  std::uint64_t states_explored = 0;
};

// Category stages in reverse pipeline order for one terminal entry.
std::vector<std::pair<int, std::pair<int, int>>>
walk_chain(const CategoryTable &table, std::size_t counts_idx,
           const Groups &groups) {
  std::vector<std::pair<int, std::pair<int, int>>> reversed; // (cat, range)
  int done = table.layer_count;
  std::size_t state = counts_idx;
  int next = table.category_count;
  while (done > 0) {
    CategoryTable::Precursor back =
        table.precursor[table.key(done, state, next)];
    if (!back.valid()) {
      throw InternalError("broken category precursor chain at " +
                          std::to_string(done) + " layers");
    }
    int cat = back.prev_category;
    reversed.push_back({cat, {back.prev_layers + 1, done}});
    state -= groups.stride[static_cast<std::size_t>(cat)];
    done = back.prev_layers;
    next = cat;
  }
  return reversed;
}

Plan materialize(const ModelProfile &model, const DevicePool &pool,
                 const Groups &groups, const CategoryTable &table,
                 std::size_t counts_idx, int microbatch_size) {
  auto reversed = walk_chain(table, counts_idx, groups);

  Plan plan;
  plan.microbatch_size = microbatch_size;
  std::vector<int> next_member(groups.labels.size(), 0);
  for (auto it = reversed.rbegin(); it != reversed.rend(); ++it) {
    auto [cat, range] = *it;
    int slot = next_member[static_cast<std::size_t>(cat)]++;
    Stage stage;
    stage.device_id =
        pool.device(groups.members[static_cast<std::size_t>(cat)]
                                  [static_cast<std::size_t>(slot)])
            .id;
    stage.first_layer = range.first;
    stage.last_layer = range.second;
    plan.stages.push_back(stage);
  }
  plan.predicted_period_s = plan_period(model, pool, plan);
  plan.predicted_throughput =
      static_cast<double>(microbatch_size) / plan.predicted_period_s;
  return plan;
}

CategoryRun run_category_dp(const ModelProfile &model, const DevicePool &pool,
                            int microbatch_size) {
  model.validate();
  pool.validate(); // includes the category-interchangeability invariant
  if (microbatch_size < 1) {
    throw InvalidArgument("microbatch_size must be >= 1");
  }

  Groups groups = make_groups(pool);
  int layer_count = model.layer_count();
  int cats = groups.category_count();
  std::size_t slots = static_cast<std::size_t>(layer_count + 1) *
                      groups.state_count * static_cast<std::size_t>(cats + 1);
  if (slots > kMaxCategoryTableSlots) {
    std::ostringstream os;
    os << "category DP memo table would need " << slots << " slots";
    throw RefusedScaleError(os.str());
  }

  detail::CostTables tables(model, pool, microbatch_size);
  CategoryCosts costs{tables, groups};
  detail::TightestMemoryBound tightest;

  CategoryRun run;
  run.table.layer_count = layer_count;
  run.table.category_count = cats;
  run.table.state_count = groups.state_count;
  run.table.h.assign(slots, kUnreached);
  run.table.precursor.assign(slots, {});
  CategoryTable &table = run.table;

  for (int u = 0; u <= cats; ++u) {
    table.h[table.key(0, 0, u)] = 0.0;
  }

  for (int done = 0; done < layer_count; ++done) {
    for (std::size_t state = 0; state < groups.state_count; ++state) {
      std::vector<int> counts = decode_counts(groups, state).counts;
      for (int uc = 0; uc < cats; ++uc) {
        if (counts[static_cast<std::size_t>(uc)] >=
            groups.capacity[static_cast<std::size_t>(uc)]) {
          continue; // no free device of this category
        }
        double base = table.h[table.key(done, state, uc)];
        if (base == kUnreached) {
          continue;
        }
        const Device &rep =
            pool.device(groups.members[static_cast<std::size_t>(uc)][0]);
        std::size_t state_with_u =
            state + groups.stride[static_cast<std::size_t>(uc)];
        for (int j = done + 1; j <= layer_count; ++j) {
          std::int64_t need = tables.range_memory(done + 1, j);
          if (need > rep.memory_bytes) {
            tightest.record(need, rep.memory_bytes, done + 1, j, rep.id);
            break;
          }
          double comp = costs.comp(uc, done + 1, j);
          if (j == layer_count) {
            ++run.states_explored;
            double candidate = std::max(base, comp);
            std::size_t slot = table.key(j, state_with_u, cats);
            if (candidate < table.h[slot]) {
              table.h[slot] = candidate;
              table.precursor[slot] = {static_cast<std::int16_t>(done),
                                       static_cast<std::int16_t>(uc)};
            }
            continue;
          }
          for (int vc = 0; vc < cats; ++vc) {
            int used_vc = counts[static_cast<std::size_t>(vc)] + (vc == uc);
            if (used_vc >= groups.capacity[static_cast<std::size_t>(vc)]) {
              continue;
            }
            ++run.states_explored;
            double candidate =
                std::max(std::max(base, comp), costs.comm(uc, vc, j));
            std::size_t slot = table.key(j, state_with_u, vc);
            if (candidate < table.h[slot]) {
              table.h[slot] = candidate;
              table.precursor[slot] = {static_cast<std::int16_t>(done),
                                       static_cast<std::int16_t>(uc)};
            }
          }
        }
      }
    }
  }

  int best_devices = pool.device_count() + 1;
  for (std::size_t state = 0; state < groups.state_count; ++state) {
    double value = table.h[table.key(layer_count, state, cats)];
    if (value == kUnreached) {
      continue;
    }
    std::vector<int> counts = decode_counts(groups, state).counts;
    int used = 0;
    for (int c : counts) {
      used += c;
    }
    if (value < run.t_opt || (value == run.t_opt && used < best_devices)) {
      run.t_opt = value;
      run.best_counts_idx = state;
      best_devices = used;
    }
  }
  if (run.t_opt == kUnreached) {
    if (tightest.seen) {
      throw InfeasibleError(tightest.message());
    }
    throw InternalError("category DP found no terminal state");
  }
  return run;
}

} // namespace

PlannerResult partition_category_dp(const ModelProfile &model,
                                    const DevicePool &pool,
                                    int microbatch_size) {
  auto start = std::chrono::steady_clock::now();
  CategoryRun run = run_category_dp(model, pool, microbatch_size);
  Groups groups = make_groups(pool);

  PlannerResult result;
  result.plan = materialize(model, pool, groups, run.table,
                            run.best_counts_idx, microbatch_size);
  result.t_opt_s = result.plan.predicted_period_s;
  result.planner = "category_dp";
  result.states_explored = run.states_explored;
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return result;
}

} // namespace pipeplan
