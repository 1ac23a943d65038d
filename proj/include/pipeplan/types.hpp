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
#include <stdexcept>
#include <string>
#include <vector>

namespace pipeplan {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad call arguments (out-of-range layer indices, empty device order, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A profile, pool, plan or input file violates a structural invariant.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// No memory-feasible assignment exists, or a plan fails validation where a
/// feasible one is required.
class InfeasibleError : public Error {
public:
  using Error::Error;
};

/// The request exceeds a planner's scale or time limits.
class RefusedScaleError : public Error {
public:
  using Error::Error;
};

/// Internal consistency failure; indicates a bug, not a bad input.
class InternalError : public Error {
public:
  using Error::Error;
};

/// One model layer. Compute cost on a device of speed `s` for a microbatch of
/// `b` samples is (fixed_overhead + base_time_per_sample * b) / s.
struct LayerSpec {
  int index = 0; // 1-based position in the model
  double base_time_per_sample = 0.0;
  double fixed_overhead = 0.0;
  std::int64_t output_bytes_per_sample = 0; // payload if a stage boundary follows
  std::int64_t memory_bytes = 0;            // resident bytes to host the layer
};

struct ModelProfile {
  std::string name;
  std::vector<LayerSpec> layers; // layer k lives at layers[k-1]

  int layer_count() const { return static_cast<int>(layers.size()); }
  const LayerSpec &layer(int index) const; // 1-based, throws InvalidArgument
  std::int64_t memory_in_range(int first_layer, int last_layer) const;

  /// Throws ValidationError unless indices are exactly 1..L and every layer
  /// satisfies its field invariants.
  void validate() const;
};

struct Device {
  std::string id;
  std::string category; // devices sharing a category must be interchangeable
  double speed = 1.0;   // compute rate multiplier, reference device = 1.0
  std::int64_t memory_bytes = 0;
};

/// A pool of devices with pairwise link characteristics. Matrix entry (u, v)
/// describes the link from sender u to receiver v, in device-list order.
struct DevicePool {
  std::vector<Device> devices;
  std::vector<std::vector<double>> bandwidth_bps;
  std::vector<std::vector<double>> latency_s; // empty means all-zero

  int device_count() const { return static_cast<int>(devices.size()); }
  const Device &device(int idx) const { return devices.at(idx); }
  int index_of(const std::string &id) const; // -1 when unknown
  double bandwidth(int from, int to) const;
  double latency(int from, int to) const;

  /// Throws ValidationError unless matrices are DxD with positive off-diagonal
  /// bandwidth, nonnegative latency, and every pair of same-category devices
  /// is fully interchangeable: equal speed and memory, and the bandwidth and
  /// latency matrices are invariant under swapping the two devices.
  void validate() const;

  /// Category label -> member device indices, members in id-sorted order,
  /// categories in label-sorted order.
  std::vector<std::pair<std::string, std::vector<int>>> categories() const;
};

struct Stage {
  std::string device_id;
  int first_layer = 0; // 1-based, inclusive
  int last_layer = 0;
};

/// An ordered stage assignment. Stage order is pipeline order; ranges must be
/// contiguous, disjoint and cover 1..L exactly.
struct Plan {
  std::vector<Stage> stages;
  int microbatch_size = 1;
  double predicted_period_s = 0.0;   // bottleneck per-microbatch period
  double predicted_throughput = 0.0; // microbatch_size / predicted_period_s
};

enum class ViolationKind {
  Coverage,      // layer gap, overlap, or range outside 1..L
  Contiguity,    // stage does not start right after its predecessor
  DeviceReuse,   // device assigned to more than one stage
  Memory,        // stage layers exceed device memory
  UnknownDevice, // stage references a device not in the pool
  LayerRange,    // first_layer > last_layer or empty plan
  Microbatch,    // microbatch_size < 1
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int stage_index = -1; // -1 when not tied to a single stage
  std::string detail;
};

std::string describe(const std::vector<Violation> &violations);

} // namespace pipeplan
