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

#include "pipeplan/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace pipeplan {

namespace {

using nlohmann::json;

const json &require(const json &j, const char *field, const std::string &ctx) {
  auto it = j.find(field);
  if (it == j.end()) {
    throw ValidationError(ctx + ": missing field '" + field + "'");
  }
  return *it;
}

double number(const json &j, const char *field, const std::string &ctx) {
  const json &v = require(j, field, ctx);
  if (!v.is_number()) {
    throw ValidationError(ctx + ": field '" + field + "' must be a number");
  }
  return v.get<double>();
}

std::int64_t integer(const json &j, const char *field, const std::string &ctx) {
  const json &v = require(j, field, ctx);
  if (!v.is_number_integer()) {
    throw ValidationError(ctx + ": field '" + field + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

std::string text(const json &j, const char *field, const std::string &ctx) {
  const json &v = require(j, field, ctx);
  if (!v.is_string()) {
    throw ValidationError(ctx + ": field '" + field + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<std::vector<double>> matrix(const json &v, const std::string &ctx) {
  if (!v.is_array()) {
    throw ValidationError(ctx + " must be an array of rows");
  }
  std::vector<std::vector<double>> out;
  for (const json &row : v) {
    if (!row.is_array()) {
      throw ValidationError(ctx + " rows must be arrays");
    }
    std::vector<double> r;
    for (const json &cell : row) {
      if (!cell.is_number()) {
        throw ValidationError(ctx + " entries must be numbers");
      }
      r.push_back(cell.get<double>());
    }
    out.push_back(std::move(r));
  }
  return out;
}

json parse(const std::string &contents, const std::string &ctx) {
  json j = json::parse(contents, nullptr, false);
  if (j.is_discarded()) {
    throw ValidationError(ctx + ": not valid JSON");
  }
  return j;
}

} // namespace

ModelProfile model_from_json(const json &j) {
  std::string ctx = "model profile";
  ModelProfile model;
  model.name = text(j, "name", ctx);
  const json &layers = require(j, "layers", ctx);
  if (!layers.is_array()) {
    throw ValidationError(ctx + ": 'layers' must be an array");
  }
  for (const json &lj : layers) {
    std::string lctx = ctx + " '" + model.name + "' layer " +
                       std::to_string(model.layers.size() + 1);
    LayerSpec layer;
    layer.index = static_cast<int>(integer(lj, "index", lctx));
    layer.base_time_per_sample = number(lj, "base_time_per_sample", lctx);
    layer.fixed_overhead = number(lj, "fixed_overhead", lctx);
    layer.output_bytes_per_sample =
        integer(lj, "output_bytes_per_sample", lctx);
    layer.memory_bytes = integer(lj, "memory_bytes", lctx);
    model.layers.push_back(layer);
  }
  model.validate();
  return model;
}

json model_to_json(const ModelProfile &model) {
  json layers = json::array();
  for (const LayerSpec &l : model.layers) {
    layers.push_back({{"index", l.index},
                      {"base_time_per_sample", l.base_time_per_sample},
                      {"fixed_overhead", l.fixed_overhead},
                      {"output_bytes_per_sample", l.output_bytes_per_sample},
                      {"memory_bytes", l.memory_bytes}});
  }
  return {{"name", model.name}, {"layers", layers}};
}

DevicePool pool_from_json(const json &j) {
  std::string ctx = "device pool";
  DevicePool pool;
  const json &devices = require(j, "devices", ctx);
  if (!devices.is_array()) {
    throw ValidationError(ctx + ": 'devices' must be an array");
  }
  for (const json &dj : devices) {
    std::string dctx =
        ctx + " device " + std::to_string(pool.devices.size() + 1);
    Device dev;
    dev.id = text(dj, "id", dctx);
    dev.category = text(dj, "category", dctx);
    dev.speed = number(dj, "speed", dctx);
    dev.memory_bytes = integer(dj, "memory_bytes", dctx);
    pool.devices.push_back(dev);
  }
  pool.bandwidth_bps = matrix(require(j, "bandwidth_bps", ctx),
                              ctx + " 'bandwidth_bps'");
  if (j.contains("latency_s")) {
    pool.latency_s = matrix(j.at("latency_s"), ctx + " 'latency_s'");
  }
  pool.validate();
  return pool;
}

json pool_to_json(const DevicePool &pool) {
  json devices = json::array();
  for (const Device &d : pool.devices) {
    devices.push_back({{"id", d.id},
                       {"category", d.category},
                       {"speed", d.speed},
                       {"memory_bytes", d.memory_bytes}});
  }
  json out = {{"devices", devices}, {"bandwidth_bps", pool.bandwidth_bps}};
  if (!pool.latency_s.empty()) {
    out["latency_s"] = pool.latency_s;
  }
  return out;
}

json planner_result_to_json(const PlannerResult &result) {
  json stages = json::array();
  for (const Stage &s : result.plan.stages) {
    stages.push_back({{"device_id", s.device_id},
                      {"first_layer", s.first_layer},
                      {"last_layer", s.last_layer}});
  }
  json out = {{"planner", result.planner},
              {"microbatch_size", result.plan.microbatch_size},
              {"t_opt_s", result.t_opt_s},
              {"predicted_throughput", result.plan.predicted_throughput},
              {"stages", stages},
              {"wall_time_s", result.wall_time_s},
              {"states_explored", result.states_explored}};
  if (!result.violations.empty()) {
    json violations = json::array();
    for (const Violation &v : result.violations) {
      violations.push_back({{"kind", to_string(v.kind)},
                            {"stage", v.stage_index},
                            {"detail", v.detail}});
    }
    out["violations"] = violations;
  }
  return out;
}

PlannerResult planner_result_from_json(const json &j) {
  std::string ctx = "plan file";
  PlannerResult result;
  result.plan.microbatch_size =
      static_cast<int>(integer(j, "microbatch_size", ctx));
  const json &stages = require(j, "stages", ctx);
  if (!stages.is_array() || stages.empty()) {
    throw ValidationError(ctx + ": 'stages' must be a non-empty array");
  }
  for (const json &sj : stages) {
    std::string sctx =
        ctx + " stage " + std::to_string(result.plan.stages.size());
    Stage stage;
    stage.device_id = text(sj, "device_id", sctx);
    stage.first_layer = static_cast<int>(integer(sj, "first_layer", sctx));
    stage.last_layer = static_cast<int>(integer(sj, "last_layer", sctx));
    result.plan.stages.push_back(stage);
  }
  if (j.contains("planner") && j.at("planner").is_string()) {
    result.planner = j.at("planner").get<std::string>();
  }
  if (j.contains("t_opt_s") && j.at("t_opt_s").is_number()) {
    result.t_opt_s = j.at("t_opt_s").get<double>();
    result.plan.predicted_period_s = result.t_opt_s;
  }
  if (j.contains("predicted_throughput") &&
      j.at("predicted_throughput").is_number()) {
    result.plan.predicted_throughput =
        j.at("predicted_throughput").get<double>();
  }
  return result;
}

json sim_event_to_json(const SimEvent &event) {
  return {{"kind", to_string(event.kind)},
          {"stage", event.stage_index},
          {"microbatch", event.microbatch_index},
          {"t", event.timestamp_s}};
}

json sim_report_to_json(const SimReport &report) {
  return {{"makespan_s", report.makespan_s},
          {"steady_period_s", report.steady_period_s},
          {"throughput_samples_per_s", report.throughput_samples_per_s},
          {"stage_busy_fraction", report.stage_busy_fraction},
          {"microbatch_count", report.microbatch_count},
          {"microbatch_size", report.microbatch_size},
          {"warmup_exclusion", report.warmup_exclusion},
          {"event_count", report.events.size()}};
}

Scenario scenario_from_json(const json &j, const std::string &base_dir) {
  std::string ctx = "scenario";
  Scenario sc;
  sc.name = text(j, "name", ctx);
  std::filesystem::path base(base_dir);
  sc.model_path = (base / text(j, "model", ctx)).string();
  sc.pool_path = (base / text(j, "pool", ctx)).string();
  if (j.contains("microbatch_sizes")) {
    const json &sizes = j.at("microbatch_sizes");
    if (!sizes.is_array() || sizes.empty()) {
      throw ValidationError(ctx + ": 'microbatch_sizes' must be a non-empty "
                                  "array");
    }
    for (const json &s : sizes) {
      if (!s.is_number_integer()) {
        throw ValidationError(ctx + ": microbatch sizes must be integers");
      }
      sc.microbatch_sizes.push_back(s.get<int>());
    }
  } else {
    sc.microbatch_sizes.push_back(
        static_cast<int>(integer(j, "microbatch_size", ctx)));
  }
  if (j.contains("comment") && j.at("comment").is_string()) {
    sc.comment = j.at("comment").get<std::string>();
  }
  return sc;
}

Scenario load_scenario(const std::string &path) {
  json j = parse(read_file(path), path);
  return scenario_from_json(
      j, std::filesystem::path(path).parent_path().string());
}

json compare_report_to_json(const CompareReport &report) {
  auto outcome_json = [](const PlannerOutcome &o) {
    return json{{"planner", o.planner},
                {"t_opt_s", o.t_opt_s},
                {"simulated_throughput", o.simulated_throughput},
                {"stage_count", o.stage_count},
                {"devices_used", o.devices_used},
                {"wall_time_s", o.wall_time_s},
                {"states_explored", o.states_explored}};
  };
  json results = json::array();
  for (const CompareResult &r : report.results) {
    json orders = json::array();
    for (const EvenOrderOutcome &o : r.even.orders) {
      json oj = {{"order", o.order},
                 {"feasible", o.feasible},
                 {"simulated_throughput", o.simulated_throughput}};
      if (!o.feasible) {
        oj["violations"] = o.violation_summary;
      }
      orders.push_back(oj);
    }
    json planners = {
        {"category_dp", outcome_json(r.category_dp)},
        {"even",
         {{"orders", orders},
          {"feasible_orders", r.even.feasible_orders},
          {"min_throughput", r.even.min_throughput},
          {"mean_throughput", r.even.mean_throughput},
          {"max_throughput", r.even.max_throughput}}},
    };
    if (r.naive_dp.has_value()) {
      planners["naive_dp"] = outcome_json(*r.naive_dp);
    } else {
      planners["naive_dp"] = {{"skipped", r.naive_dp_skip_reason}};
    }
    results.push_back({{"microbatch_size", r.microbatch_size},
                       {"planners", planners}});
  }
  return {{"scenario", report.scenario},
          {"seed", report.seed},
          {"even_order_count", report.even_order_count},
          {"results", results}};
}

ModelProfile load_model(const std::string &path) {
  return model_from_json(parse(read_file(path), path));
}

DevicePool load_pool(const std::string &path) {
  return pool_from_json(parse(read_file(path), path));
}

PlannerResult load_planner_result(const std::string &path) {
  return planner_result_from_json(parse(read_file(path), path));
}

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::string &path, const std::string &contents) {
  std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    out << contents;
    if (!out.good()) {
      throw Error("short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, target);
}

} // namespace pipeplan
