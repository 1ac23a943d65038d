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
#include <vector>

#include "pipeplan/cost.hpp"
#include "pipeplan/types.hpp"

namespace pipeplan::detail {

// Stage costs memoized for planner inner loops. Every entry is produced by
// the canonical t_comp/t_comm calls, so independently built instances see
// bit-identical values.
class CostTables {
public:
  CostTables(const ModelProfile &model, const DevicePool &pool,
             int microbatch_size)
      : layers_(model.layer_count()), devices_(pool.device_count()) {
    std::size_t l = static_cast<std::size_t>(layers_);
    std::size_t d = static_cast<std::size_t>(devices_);

    comp_.assign(d * l * l, 0.0);
    for (int u = 0; u < devices_; ++u) {
      for (int first = 1; first <= layers_; ++first) {
        for (int last = first; last <= layers_; ++last) {
          comp_[comp_key(u, first, last)] =
              t_comp(model, first, last, pool.device(u), microbatch_size);
        }
      }
    }

    comm_.assign(d * d * l, 0.0);
    for (int from = 0; from < devices_; ++from) {
      for (int to = 0; to < devices_; ++to) {
        if (from == to) {
          continue;
        }
        for (int boundary = 1; boundary <= layers_; ++boundary) {
          comm_[comm_key(from, to, boundary)] = t_comm(
              pool, from, to, boundary_bytes(model, boundary, microbatch_size));
        }
      }
    }

    memory_.assign(l + 1, 0);
    for (int k = 1; k <= layers_; ++k) {
      memory_[static_cast<std::size_t>(k)] =
          memory_[static_cast<std::size_t>(k - 1)] +
          model.layers[static_cast<std::size_t>(k - 1)].memory_bytes;
    }
  }

  double stage_comp(int dev, int first, int last) const {
    return comp_[comp_key(dev, first, last)];
  }
  double stage_comm(int from, int to, int boundary) const {
    return comm_[comm_key(from, to, boundary)];
  }
  std::int64_t range_memory(int first, int last) const {
    return memory_[static_cast<std::size_t>(last)] -
           memory_[static_cast<std::size_t>(first - 1)];
  }

private:
  std::size_t comp_key(int dev, int first, int last) const {
    std::size_t l = static_cast<std::size_t>(layers_);
    return (static_cast<std::size_t>(dev) * l +
            static_cast<std::size_t>(first - 1)) *
               l +
           static_cast<std::size_t>(last - 1);
  }
  std::size_t comm_key(int from, int to, int boundary) const {
    return (static_cast<std::size_t>(from) * static_cast<std::size_t>(devices_) +
            static_cast<std::size_t>(to)) *
               static_cast<std::size_t>(layers_) +
           static_cast<std::size_t>(boundary - 1);
  }

  int layers_;
  int devices_;
  std::vector<double> comp_;
  std::vector<double> comm_;
  std::vector<std::int64_t> memory_;
};

// Pins down the infeasibility certificate: the memory violation with the
// smallest shortfall seen while pruning.
struct TightestMemoryBound {
  bool seen = false;
  std::int64_t shortfall = 0;
  std::int64_t needed = 0;
  std::int64_t capacity = 0;
  int first_layer = 0;
  int last_layer = 0;
  std::string device_id;

  void record(std::int64_t need, std::int64_t cap, int first, int last,
              const std::string &dev) {
    std::int64_t gap = need - cap;
    if (!seen || gap < shortfall) {
      seen = true;
      shortfall = gap;
      needed = need;
      capacity = cap;
      first_layer = first;
      last_layer = last;
      device_id = dev;
    }
  }

  std::string message() const;
};

} // namespace pipeplan::detail
