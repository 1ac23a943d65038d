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

#include "pipeplan/cost.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace pipeplan {

namespace {

void check_range(const ModelProfile &model, int first_layer, int last_layer) {
  if (first_layer < 1 || last_layer > model.layer_count() ||
      first_layer > last_layer) {
    std::ostringstream os;
    os << "layer range " << first_layer << ".." << last_layer << " outside 1.."
       << model.layer_count();
    throw InvalidArgument(os.str());
  }
}

} // namespace

double t_comp(const ModelProfile &model, int first_layer, int last_layer,
              const Device &dev, int microbatch_size) {
  check_range(model, first_layer, last_layer);
  if (microbatch_size < 1) {
    throw InvalidArgument("microbatch_size must be >= 1");
  }
  if (dev.speed <= 0) {
    throw InvalidArgument("device '" + dev.id + "' has speed <= 0");
  }
  double total = 0.0;
  for (int k = first_layer; k <= last_layer; ++k) {
    const LayerSpec &l = model.layers[static_cast<std::size_t>(k - 1)];
    total += (l.fixed_overhead +
              l.base_time_per_sample * static_cast<double>(microbatch_size)) /
             dev.speed;
  }
  return total;
}

double t_comm(const DevicePool &pool, int from, std::optional<int> to,
              std::int64_t bytes) {
  if (from < 0 || from >= pool.device_count()) {
    throw InvalidArgument("sender index out of range");
  }
  if (!to.has_value()) {
    return 0.0; // final stage has no successor
  }
  if (*to < 0 || *to >= pool.device_count()) {
    throw InvalidArgument("receiver index out of range");
  }
  if (bytes < 0) {
    throw InvalidArgument("negative byte count");
  }
  double bw = pool.bandwidth(from, *to);
  if (bw <= 0) {
    std::ostringstream os;
    os << "bandwidth from '" << pool.device(from).id << "' to '"
       << pool.device(*to).id << "' is not positive";
    throw ValidationError(os.str());
  }
  return static_cast<double>(bytes) * 8.0 / bw + pool.latency(from, *to);
}

std::int64_t boundary_bytes(const ModelProfile &model, int last_layer,
                            int microbatch_size) {
  check_range(model, last_layer, last_layer);
  return model.layers[static_cast<std::size_t>(last_layer - 1)]
             .output_bytes_per_sample *
         static_cast<std::int64_t>(microbatch_size);
}

double t_period(const ModelProfile &model, const DevicePool &pool,
                int first_layer, int last_layer, int from,
                std::optional<int> to, int microbatch_size) {
  double comp =
      t_comp(model, first_layer, last_layer, pool.device(from), microbatch_size);
  double comm = t_comm(pool, from, to,
                       boundary_bytes(model, last_layer, microbatch_size));
  return std::max(comp, comm);
}

std::vector<Violation> validate_plan(const ModelProfile &model,
                                     const DevicePool &pool, const Plan &plan) {
  std::vector<Violation> out;
  int layer_count = model.layer_count();

  if (plan.microbatch_size < 1) {
    out.push_back({ViolationKind::Microbatch, -1,
                   "microbatch_size must be >= 1, got " +
                       std::to_string(plan.microbatch_size)});
  }
  if (plan.stages.empty()) {
    out.push_back({ViolationKind::LayerRange, -1, "plan has no stages"});
    return out;
  }

  std::set<std::string> seen_devices;
  int expected_first = 1;
  bool ranges_ok = true;
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    const Stage &stage = plan.stages[s];
    int idx = static_cast<int>(s);

    if (stage.first_layer > stage.last_layer) {
      std::ostringstream os;
      os << "first_layer " << stage.first_layer << " > last_layer "
         << stage.last_layer;
      out.push_back({ViolationKind::LayerRange, idx, os.str()});
      ranges_ok = false;
    }
    if (stage.first_layer < 1 || stage.last_layer > layer_count) {
      std::ostringstream os;
      os << "range " << stage.first_layer << ".." << stage.last_layer
         << " outside model layers 1.." << layer_count;
      out.push_back({ViolationKind::Coverage, idx, os.str()});
      ranges_ok = false;
    }
    if (ranges_ok && stage.first_layer != expected_first) {
      std::ostringstream os;
      if (stage.first_layer > expected_first) {
        os << "layers " << expected_first << ".." << stage.first_layer - 1
           << " are not covered";
        out.push_back({ViolationKind::Coverage, idx, os.str()});
      } else {
        os << "stage starts at layer " << stage.first_layer << ", expected "
           << expected_first;
        out.push_back({ViolationKind::Contiguity, idx, os.str()});
      }
      ranges_ok = false;
    }
    if (ranges_ok) {
      expected_first = stage.last_layer + 1;
    }

    int dev = pool.index_of(stage.device_id);
    if (dev < 0) {
      out.push_back({ViolationKind::UnknownDevice, idx,
                     "device '" + stage.device_id + "' not in pool"});
      continue;
    }
    if (!seen_devices.insert(stage.device_id).second) {
      out.push_back({ViolationKind::DeviceReuse, idx,
                     "device '" + stage.device_id +
                         "' already used by an earlier stage"});
    }
    if (stage.first_layer >= 1 && stage.last_layer <= layer_count &&
        stage.first_layer <= stage.last_layer) {
      std::int64_t need =
          model.memory_in_range(stage.first_layer, stage.last_layer);
      std::int64_t have = pool.device(dev).memory_bytes;
      if (need > have) {
        std::ostringstream os;
        os << "layers " << stage.first_layer << ".." << stage.last_layer
           << " need " << need << " bytes but device '" << stage.device_id
           << "' has " << have;
        out.push_back({ViolationKind::Memory, idx, os.str()});
      }
    }
  }
  if (ranges_ok && expected_first != layer_count + 1) {
    std::ostringstream os;
    os << "layers " << expected_first << ".." << layer_count
       << " are not covered";
    out.push_back({ViolationKind::Coverage,
                   static_cast<int>(plan.stages.size()) - 1, os.str()});
  }
  return out;
}

double plan_period_unchecked(const ModelProfile &model, const DevicePool &pool,
                             const Plan &plan) {
  double period = 0.0;
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    const Stage &stage = plan.stages[s];
    int from = pool.index_of(stage.device_id);
    if (from < 0) {
      throw InvalidArgument("device '" + stage.device_id + "' not in pool");
    }
    std::optional<int> to;
    if (s + 1 < plan.stages.size()) {
      int next = pool.index_of(plan.stages[s + 1].device_id);
      if (next < 0) {
        throw InvalidArgument("device '" + plan.stages[s + 1].device_id +
                              "' not in pool");
      }
      to = next;
    }
    period = std::max(period, t_period(model, pool, stage.first_layer,
                                       stage.last_layer, from, to,
                                       plan.microbatch_size));
  }
  return period;
}

double plan_period(const ModelProfile &model, const DevicePool &pool,
                   const Plan &plan) {
  std::vector<Violation> violations = validate_plan(model, pool, plan);
  if (!violations.empty()) {
    throw InfeasibleError("infeasible plan: " + describe(violations));
  }
  return plan_period_unchecked(model, pool, plan);
}

} // namespace pipeplan
