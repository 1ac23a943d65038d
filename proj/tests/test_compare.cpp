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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pipeplan/compare.hpp"
#include "support/builders.hpp"

using namespace pipeplan;
using namespace pipeplan::testing;

namespace {

Scenario in_memory_scenario(int mb) {
  Scenario sc;
  sc.name = "unit";
  sc.microbatch_sizes = {mb};
  return sc;
}

} // namespace

TEST_CASE("homogeneous pools level the planners and the baseline") {
  ModelProfile model = uniform_model(12, 0.05, 10'000, 1'000'000);
  DevicePool pool = identical_pool(4, 1.0, std::int64_t{1} << 30, 1e12);

  CompareReport report =
      run_compare(model, pool, in_memory_scenario(2), 99, 10);
  REQUIRE(report.results.size() == 1);
  const CompareResult &r = report.results[0];

  REQUIRE(r.naive_dp.has_value());
  CHECK(r.category_dp.t_opt_s == r.naive_dp->t_opt_s);
  CHECK(r.even.feasible_orders == 10);
  // every device order is interchangeable here
  CHECK(r.even.min_throughput ==
        doctest::Approx(r.even.max_throughput).epsilon(1e-12));
  CHECK(r.category_dp.simulated_throughput ==
        doctest::Approx(r.even.max_throughput).epsilon(1e-12));
}

TEST_CASE("DP dominates every sampled even order") {
  Instance inst = make_random_instance(404, InstanceOptions{});
  CompareReport report =
      run_compare(inst.model, inst.pool, in_memory_scenario(4), 7, 10);
  const CompareResult &r = report.results[0];
  if (r.even.feasible_orders > 0) {
    CHECK(r.category_dp.simulated_throughput >=
          r.even.max_throughput * (1 - 1e-9));
  }
}

TEST_CASE("identical seeds reproduce the same device orders") {
  Instance inst = make_random_instance(11, InstanceOptions{});
  Scenario sc = in_memory_scenario(2);
  CompareReport a = run_compare(inst.model, inst.pool, sc, 31, 5);
  CompareReport b = run_compare(inst.model, inst.pool, sc, 31, 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(a.results[0].even.orders[static_cast<std::size_t>(i)].order ==
          b.results[0].even.orders[static_cast<std::size_t>(i)].order);
  }
}

TEST_CASE("naive DP is skipped, not run, on very large pools") {
  ModelProfile model = uniform_model(16, 0.05, 10'000, 1'000'000);
  DevicePool pool = identical_pool(13, 1.0, std::int64_t{1} << 30, 1e12);
  CompareReport report =
      run_compare(model, pool, in_memory_scenario(1), 1, 3);
  CHECK(!report.results[0].naive_dp.has_value());
  CHECK(!report.results[0].naive_dp_skip_reason.empty());
  CHECK(report.results[0].category_dp.stage_count > 0);
}

TEST_CASE("orders are truncated when the pool outnumbers the layers") {
  ModelProfile model = uniform_model(3, 0.05, 10'000, 1'000'000);
  DevicePool pool = identical_pool(5, 1.0, std::int64_t{1} << 30, 1e12);
  CompareReport report =
      run_compare(model, pool, in_memory_scenario(1), 2, 4);
  for (const EvenOrderOutcome &o : report.results[0].even.orders) {
    CHECK(o.order.size() == 3);
  }
}
