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

#include <optional>

#include "pipeplan/types.hpp"

namespace pipeplan {

/// Sentinel receiver for the final pipeline stage (no outbound transfer).
inline constexpr std::optional<int> kNoReceiver = std::nullopt;

/// Compute seconds for layers [first_layer, last_layer] on `dev` with a
/// microbatch of `microbatch_size` samples. Every planner and the simulator
/// must price computation through this one function so that independently
/// produced plans compare bit-exactly.
double t_comp(const ModelProfile &model, int first_layer, int last_layer,
              const Device &dev, int microbatch_size);

/// Transfer seconds for `bytes` from device `from` to device `to`:
/// bytes * 8 / bandwidth + latency. A disengaged `to` (final stage) costs 0.
double t_comm(const DevicePool &pool, int from, std::optional<int> to,
              std::int64_t bytes);

/// Payload leaving a stage whose last layer is `last_layer`.
std::int64_t boundary_bytes(const ModelProfile &model, int last_layer,
                            int microbatch_size);

/// Per-microbatch period of one stage: compute and outbound transfer fully
/// overlap, so the stage is paced by whichever is slower.
double t_period(const ModelProfile &model, const DevicePool &pool,
                int first_layer, int last_layer, int from,
                std::optional<int> to, int microbatch_size);

/// All violated plan invariants; empty result means the plan is valid.
std::vector<Violation> validate_plan(const ModelProfile &model,
                                     const DevicePool &pool, const Plan &plan);

/// Bottleneck period: max stage t_period. Throws InfeasibleError naming the
/// violated invariants when the plan does not validate.
double plan_period(const ModelProfile &model, const DevicePool &pool,
                   const Plan &plan);

/// Same max without validation; used to report the period of a deliberately
/// infeasible baseline plan. Requires stage ranges and devices to resolve.
double plan_period_unchecked(const ModelProfile &model, const DevicePool &pool,
                             const Plan &plan);

} // namespace pipeplan
