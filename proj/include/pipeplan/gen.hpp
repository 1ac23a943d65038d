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
#include <random>
#include <vector>

#include "pipeplan/types.hpp"

namespace pipeplan {

/// mt19937_64 with hand-rolled draws. std::uniform_*_distribution and
/// std::shuffle are implementation-defined, so identical seeds would not give
/// identical instances across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  template <typename T> void shuffle(std::vector<T> &values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(engine_() % i);
      std::swap(values[i - 1], values[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

struct Instance {
  ModelProfile model;
  DevicePool pool;
};

struct InstanceOptions {
  int layers = 12;
  int categories = 3;
  int per_category = 3;
  double min_layer_time = 0.01;
  double max_layer_time = 0.2;
  double overhead_fraction = 0.1; // fixed_overhead relative to layer time
  std::int64_t min_output_bytes = 10'000;
  std::int64_t max_output_bytes = 5'000'000;
  std::int64_t min_layer_memory = 10'000'000;
  std::int64_t max_layer_memory = 200'000'000;
  double min_speed = 0.25;
  double max_speed = 2.0;
  double min_bandwidth_bps = 5e6;
  double max_bandwidth_bps = 1e9;
  /// Device memory as a multiple of total model memory; >= 1 keeps every
  /// instance feasible on a single device.
  double min_memory_headroom = 0.3;
  double max_memory_headroom = 1.5;
};

/// Seeded random model + categorized pool. Devices within a category share
/// speed, memory and link rows, so the result always passes pool validation.
Instance make_random_instance(std::uint64_t seed, const InstanceOptions &opts);

} // namespace pipeplan
