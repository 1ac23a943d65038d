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

#include <string>

#include <json.hpp>

#include "pipeplan/compare.hpp"
#include "pipeplan/partition.hpp"
#include "pipeplan/sim.hpp"
#include "pipeplan/types.hpp"

namespace pipeplan {

// Parse errors and failed invariants surface as ValidationError with the
// offending file and field in the message. Unknown fields (e.g. "comment")
// are ignored; byte quantities must be JSON integers.

ModelProfile model_from_json(const nlohmann::json &j);
nlohmann::json model_to_json(const ModelProfile &model);
ModelProfile load_model(const std::string &path);

DevicePool pool_from_json(const nlohmann::json &j);
nlohmann::json pool_to_json(const DevicePool &pool);
DevicePool load_pool(const std::string &path);

/// Plan files carry the producing planner's metadata alongside the stages.
nlohmann::json planner_result_to_json(const PlannerResult &result);
/// Reads stages + microbatch_size (required); metadata fields are optional.
PlannerResult planner_result_from_json(const nlohmann::json &j);
PlannerResult load_planner_result(const std::string &path);

nlohmann::json sim_report_to_json(const SimReport &report);
nlohmann::json sim_event_to_json(const SimEvent &event);

Scenario scenario_from_json(const nlohmann::json &j,
                            const std::string &base_dir);
Scenario load_scenario(const std::string &path);

nlohmann::json compare_report_to_json(const CompareReport &report);

/// Writes via a temporary file and rename, so a failed run never leaves a
/// partial output behind.
void write_file_atomic(const std::string &path, const std::string &contents);

std::string read_file(const std::string &path);

} // namespace pipeplan
