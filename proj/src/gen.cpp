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

#include "pipeplan/gen.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pipeplan {

Instance make_random_instance(std::uint64_t seed, const InstanceOptions &opts) {
  if (opts.layers < 1 || opts.categories < 1 || opts.per_category < 1) {
    throw InvalidArgument("instance needs at least one layer and one device");
  }
  Rng rng(seed);
  Instance inst;

  std::ostringstream name;
  name << "random-" << seed << "-L" << opts.layers << "-N" << opts.categories
       << "x" << opts.per_category;
  inst.model.name = name.str();
  std::int64_t total_memory = 0;
  for (int k = 1; k <= opts.layers; ++k) {
    LayerSpec layer;
    layer.index = k;
    layer.base_time_per_sample =
        rng.uniform(opts.min_layer_time, opts.max_layer_time);
    layer.fixed_overhead =
        layer.base_time_per_sample * opts.overhead_fraction * rng.next_unit();
    layer.output_bytes_per_sample =
        rng.uniform_int(opts.min_output_bytes, opts.max_output_bytes);
    layer.memory_bytes =
        rng.uniform_int(opts.min_layer_memory, opts.max_layer_memory);
    total_memory += layer.memory_bytes;
    inst.model.layers.push_back(layer);
  }

  int device_count = opts.categories * opts.per_category;
  std::vector<double> cat_speed(static_cast<std::size_t>(opts.categories));
  std::vector<std::int64_t> cat_memory(
      static_cast<std::size_t>(opts.categories));
  for (int c = 0; c < opts.categories; ++c) {
    cat_speed[static_cast<std::size_t>(c)] =
        rng.uniform(opts.min_speed, opts.max_speed);
    double headroom =
        rng.uniform(opts.min_memory_headroom, opts.max_memory_headroom);
    cat_memory[static_cast<std::size_t>(c)] = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(
               std::ceil(static_cast<double>(total_memory) * headroom)));
  }
  // Category-level links keep same-category devices interchangeable. The
  // directed cross-category values may differ; only the intra-category value
  // is necessarily one number.
  std::vector<std::vector<double>> cat_bw(
      static_cast<std::size_t>(opts.categories),
      std::vector<double>(static_cast<std::size_t>(opts.categories)));
  for (int a = 0; a < opts.categories; ++a) {
    for (int b = 0; b < opts.categories; ++b) {
      cat_bw[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          rng.uniform(opts.min_bandwidth_bps, opts.max_bandwidth_bps);
    }
  }

  for (int c = 0; c < opts.categories; ++c) {
    for (int m = 0; m < opts.per_category; ++m) {
      Device dev;
      std::ostringstream id;
      id << "d" << c << "x" << m;
      dev.id = id.str();
      std::ostringstream cat;
      cat << "cat-" << c;
      dev.category = cat.str();
      dev.speed = cat_speed[static_cast<std::size_t>(c)];
      dev.memory_bytes = cat_memory[static_cast<std::size_t>(c)];
      inst.pool.devices.push_back(dev);
    }
  }
  std::size_t n = static_cast<std::size_t>(device_count);
  inst.pool.bandwidth_bps.assign(n, std::vector<double>(n, 0.0));
  for (int u = 0; u < device_count; ++u) {
    for (int v = 0; v < device_count; ++v) {
      if (u == v) {
        continue;
      }
      int cu = u / opts.per_category;
      int cv = v / opts.per_category;
      inst.pool.bandwidth_bps[static_cast<std::size_t>(u)]
                             [static_cast<std::size_t>(v)] =
          cat_bw[static_cast<std::size_t>(cu)][static_cast<std::size_t>(cv)];
    }
  }

  inst.model.validate();
  inst.pool.validate();
  return inst;
}

} // namespace pipeplan
