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

#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pipeplan/compare.hpp"
#include "pipeplan/cost.hpp"
#include "pipeplan/gen.hpp"
#include "pipeplan/json_io.hpp"
#include "pipeplan/partition.hpp"
#include "pipeplan/sim.hpp"

namespace {

using namespace pipeplan;
using nlohmann::json;

// Exit codes: 0 ok, 1 usage, 2 parse/validation, 3 infeasible,
// 4 refused scale, 5 internal.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitRefusedScale = 4;
constexpr int kExitInternal = 5;

// Bench keeps brute force inside the scale the search finishes in minutes,
// not hours; anything larger is refused even when explicitly requested.
constexpr int kBenchBruteMaxDevices = 9;
constexpr int kBenchBruteMaxLayers = 12;

struct Options {
  bool quiet = false;
  std::uint64_t seed = 42;

  std::string model_path;
  std::string pool_path;
  std::string plan_path;
  std::string scenario_path;
  std::string output;
  std::string events_path;

  std::string planner = "dp";
  int microbatch_size = 1;
  int mb_override = 0; // simulate: 0 means "use the plan's size"
  int microbatches = 100;
  std::vector<std::string> device_order;
  int orders = 10;

  int layers = 12;
  int categories = 3;
  int per_category = 3;
  bool with_brute = false;
  double brute_budget_s = 600.0;
};

void print_stages(const Plan &plan) {
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    const Stage &st = plan.stages[s];
    std::cout << "  stage " << s << ": layers " << st.first_layer << ".."
              << st.last_layer << " on " << st.device_id << "\n";
  }
}

int cmd_plan(const Options &opt) {
  ModelProfile model = load_model(opt.model_path);
  DevicePool pool = load_pool(opt.pool_path);

  PlannerResult result;
  if (opt.planner == "dp") {
    result = partition_naive_dp(model, pool, opt.microbatch_size);
  } else if (opt.planner == "category") {
    result = partition_category_dp(model, pool, opt.microbatch_size);
  } else if (opt.planner == "brute") {
    result = partition_brute_force(model, pool, opt.microbatch_size);
  } else if (opt.planner == "even") {
    if (opt.device_order.empty()) {
      throw CLI::ValidationError("--device-order is required with "
                                 "--planner even");
    }
    result = partition_even(model, pool, opt.device_order,
                            opt.microbatch_size);
  } else {
    throw CLI::ValidationError("unknown planner '" + opt.planner + "'");
  }

  std::string out = opt.output.empty() ? "plan.json" : opt.output;
  write_file_atomic(out, planner_result_to_json(result).dump(2) + "\n");
  if (!opt.quiet) {
    std::cout << result.planner << ": t_opt " << result.t_opt_s
              << " s, predicted throughput "
              << result.plan.predicted_throughput << " samples/s, "
              << result.plan.stages.size() << " stages ("
              << result.states_explored << " states, " << result.wall_time_s
              << " s)\n";
    print_stages(result.plan);
    if (!result.violations.empty()) {
      std::cout << "  WARNING: plan is infeasible: "
                << describe(result.violations) << "\n";
    }
    std::cout << "wrote " << out << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const Options &opt) {
  ModelProfile model = load_model(opt.model_path);
  DevicePool pool = load_pool(opt.pool_path);
  PlannerResult loaded = load_planner_result(opt.plan_path);
  Plan plan = loaded.plan;
  if (opt.mb_override > 0) {
    plan.microbatch_size = opt.mb_override;
  }

  SimConfig config;
  config.microbatch_count = opt.microbatches;
  config.microbatch_size = plan.microbatch_size;
  SimReport report = simulate(model, pool, plan, config);
  double analytic = plan_period(model, pool, plan);
  double rel_error = analytic > 0
                         ? std::abs(report.steady_period_s - analytic) /
                               analytic
                         : 0.0;

  json out_json = sim_report_to_json(report);
  out_json["analytic_period_s"] = analytic;
  out_json["relative_error"] = rel_error;
  std::string out = opt.output.empty() ? "sim_report.json" : opt.output;
  write_file_atomic(out, out_json.dump(2) + "\n");

  if (!opt.events_path.empty()) {
    std::ostringstream lines;
    for (const SimEvent &ev : report.events) {
      lines << sim_event_to_json(ev).dump() << "\n";
    }
    write_file_atomic(opt.events_path, lines.str());
  }

  if (!opt.quiet) {
    std::cout << "simulated " << report.microbatch_count
              << " microbatches: steady throughput "
              << report.throughput_samples_per_s
              << " samples/s (period " << report.steady_period_s
              << " s, analytic " << analytic << " s, relative error "
              << std::scientific << std::setprecision(3) << rel_error
              << std::defaultfloat << ")\n";
    std::cout << "wrote " << out << "\n";
  }
  return kExitOk;
}

int cmd_compare(const Options &opt) {
  Scenario scenario = load_scenario(opt.scenario_path);
  ModelProfile model = load_model(scenario.model_path);
  DevicePool pool = load_pool(scenario.pool_path);
  CompareReport report =
      run_compare(model, pool, scenario, opt.seed, opt.orders);

  std::string out = opt.output.empty() ? "compare_report.json" : opt.output;
  write_file_atomic(out, compare_report_to_json(report).dump(2) + "\n");

  if (!opt.quiet) {
    std::cout << "scenario " << report.scenario << " (seed " << report.seed
              << ")\n";
    for (const CompareResult &r : report.results) {
      std::cout << "microbatch " << r.microbatch_size << ":\n";
      std::cout << "  category_dp: " << r.category_dp.simulated_throughput
                << " samples/s over " << r.category_dp.stage_count
                << " stages\n";
      if (r.naive_dp.has_value()) {
        std::cout << "  naive_dp:    " << r.naive_dp->simulated_throughput
                  << " samples/s over " << r.naive_dp->stage_count
                  << " stages\n";
      } else {
        std::cout << "  naive_dp:    skipped (" << r.naive_dp_skip_reason
                  << ")\n";
      }
      std::cout << "  even:        min " << r.even.min_throughput << ", mean "
                << r.even.mean_throughput << ", max "
                << r.even.max_throughput << " samples/s over "
                << r.even.feasible_orders << "/" << r.even.orders.size()
                << " feasible orders\n";
    }
    std::cout << "wrote " << out << "\n";
  }
  return kExitOk;
}

int cmd_bench_planners(const Options &opt) {
  InstanceOptions gen_opts;
  gen_opts.layers = opt.layers;
  gen_opts.categories = opt.categories;
  gen_opts.per_category = opt.per_category;
  Instance inst = make_random_instance(opt.seed, gen_opts);

  std::vector<PlannerResult> runs;
  runs.push_back(
      partition_category_dp(inst.model, inst.pool, opt.microbatch_size));
  runs.push_back(
      partition_naive_dp(inst.model, inst.pool, opt.microbatch_size));
  std::string brute_refusal;
  if (opt.with_brute) {
    BruteForceLimits limits;
    limits.max_devices = kBenchBruteMaxDevices;
    limits.max_layers = kBenchBruteMaxLayers;
    limits.time_budget_s = opt.brute_budget_s;
    try {
      runs.push_back(partition_brute_force(inst.model, inst.pool,
                                           opt.microbatch_size, limits));
    } catch (const RefusedScaleError &e) {
      brute_refusal = e.what();
    }
  }

  for (const PlannerResult &r : runs) {
    if (r.t_opt_s != runs.front().t_opt_s) {
      throw InternalError("planners disagree: " + r.planner + " found " +
                          std::to_string(r.t_opt_s) + ", " +
                          runs.front().planner + " found " +
                          std::to_string(runs.front().t_opt_s));
    }
  }

  json planners = json::array();
  for (const PlannerResult &r : runs) {
    planners.push_back({{"planner", r.planner},
                        {"t_opt_s", r.t_opt_s},
                        {"wall_time_s", r.wall_time_s},
                        {"states_explored", r.states_explored},
                        {"stage_count", r.plan.stages.size()}});
  }
  if (!brute_refusal.empty()) {
    planners.push_back({{"planner", "brute_force"}, {"refused", brute_refusal}});
  }
  json out_json = {{"seed", opt.seed},
                   {"layers", opt.layers},
                   {"categories", opt.categories},
                   {"per_category", opt.per_category},
                   {"microbatch_size", opt.microbatch_size},
                   {"agreement", true},
                   {"planners", planners}};
  std::string out = opt.output.empty() ? "bench_report.json" : opt.output;
  write_file_atomic(out, out_json.dump(2) + "\n");

  if (!opt.quiet) {
    std::cout << "instance: L=" << opt.layers << ", N=" << opt.categories
              << ", n=" << opt.per_category << ", seed " << opt.seed << "\n";
    for (const PlannerResult &r : runs) {
      std::cout << "  " << std::left << std::setw(12) << r.planner
                << std::right << " t_opt " << r.t_opt_s << " s, wall "
                << r.wall_time_s << " s, states " << r.states_explored
                << "\n";
    }
    if (!brute_refusal.empty()) {
      std::cout << "  brute_force  refused: " << brute_refusal << "\n";
    }
    std::cout << "all planners agree on t_opt\n";
    std::cout << "wrote " << out << "\n";
  }
  return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Pipeline partition planner and simulator for heterogeneous "
               "device pools"};
  app.require_subcommand(1);

  Options opt;
  app.add_flag("--quiet", opt.quiet, "suppress the human-readable summary");
  app.add_option("--seed", opt.seed, "PRNG seed for randomized subcommands");

  CLI::App *plan = app.add_subcommand("plan", "partition a model onto a pool");
  plan->fallthrough();
  plan->add_option("model", opt.model_path, "model profile JSON")->required();
  plan->add_option("pool", opt.pool_path, "device pool JSON")->required();
  plan->add_option("--planner", opt.planner,
                   "one of dp|category|brute|even (default dp)");
  plan->add_option("--mb", opt.microbatch_size, "microbatch size")
      ->check(CLI::PositiveNumber);
  plan->add_option("--device-order", opt.device_order,
                   "device ids for --planner even, in pipeline order");
  plan->add_option("--output,-o", opt.output, "plan output path");

  CLI::App *sim = app.add_subcommand("simulate", "simulate a plan file");
  sim->fallthrough();
  sim->add_option("model", opt.model_path, "model profile JSON")->required();
  sim->add_option("pool", opt.pool_path, "device pool JSON")->required();
  sim->add_option("plan", opt.plan_path, "plan JSON")->required();
  sim->add_option("--microbatches", opt.microbatches,
                  "number of microbatches to stream")
      ->check(CLI::PositiveNumber);
  sim->add_option("--mb", opt.mb_override,
                  "override the plan's microbatch size")
      ->check(CLI::PositiveNumber);
  sim->add_option("--events", opt.events_path, "write the event log (JSONL)");
  sim->add_option("--output,-o", opt.output, "report output path");

  CLI::App *cmp = app.add_subcommand(
      "compare", "run the planners against even baselines on a scenario");
  cmp->fallthrough();
  cmp->add_option("scenario", opt.scenario_path, "scenario JSON")->required();
  cmp->add_option("--orders", opt.orders,
                  "number of random device orders for the even baseline")
      ->check(CLI::PositiveNumber);
  cmp->add_option("--output,-o", opt.output, "report output path");

  CLI::App *bench = app.add_subcommand(
      "bench-planners", "time every planner on one random instance");
  bench->fallthrough();
  bench->add_option("--layers", opt.layers, "model layers")
      ->check(CLI::PositiveNumber);
  bench->add_option("--categories", opt.categories, "device categories")
      ->check(CLI::PositiveNumber);
  bench->add_option("--per-category", opt.per_category,
                    "devices per category")
      ->check(CLI::PositiveNumber);
  bench->add_option("--mb", opt.microbatch_size, "microbatch size")
      ->check(CLI::PositiveNumber);
  bench->add_flag("--with-brute", opt.with_brute,
                  "also run the brute-force search (bounded scale)");
  bench->add_option("--brute-budget-s", opt.brute_budget_s,
                    "wall-clock budget for brute force");
  bench->add_option("--output,-o", opt.output, "report output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int code = app.exit(e); // prints the message or requested help text
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (plan->parsed()) {
      return cmd_plan(opt);
    }
    if (sim->parsed()) {
      return cmd_simulate(opt);
    }
    if (cmp->parsed()) {
      return cmd_compare(opt);
    }
    if (bench->parsed()) {
      return cmd_bench_planners(opt);
    }
  } catch (const RefusedScaleError &e) {
    std::cerr << "refused scale: " << e.what() << "\n";
    return kExitRefusedScale;
  } catch (const InfeasibleError &e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ValidationError &e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitParse;
  } catch (const InvalidArgument &e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitParse;
  } catch (const InternalError &e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const CLI::Error &e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
