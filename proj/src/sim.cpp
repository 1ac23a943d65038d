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

#include "pipeplan/sim.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "pipeplan/cost.hpp"

namespace pipeplan {

std::string to_string(SimEventKind kind) {
  switch (kind) {
  case SimEventKind::SendEnd:
    return "send-end";
  case SimEventKind::ComputeEnd:
    return "compute-end";
  case SimEventKind::ComputeStart:
    return "compute-start";
  case SimEventKind::SendStart:
    return "send-start";
  }
  return "unknown";
}

namespace {

struct QueuedEvent {
  double t;
  SimEventKind kind;
  int stage;
  int microbatch;
};

// Min-heap order: time, then the SimEventKind tie rank, then stage, then
// microbatch. No two queued events ever share all four fields.
struct LaterThan {
  bool operator()(const QueuedEvent &a, const QueuedEvent &b) const {
    if (a.t != b.t) {
      return a.t > b.t;
    }
    if (a.kind != b.kind) {
      return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    }
    if (a.stage != b.stage) {
      return a.stage > b.stage;
    }
    return a.microbatch > b.microbatch;
  }
};

struct StageState {
  double comp_time = 0.0;
  int received = 0; // microbatches whose input has arrived
  int next_compute = 0;
  bool computing = false;
  bool start_pending = false;
  double busy_s = 0.0;
  double started_at = 0.0;
};

struct LinkState {
  double comm_time = 0.0;
  int enqueued = 0; // microbatches handed over by the stage
  int next_send = 0;
  bool sending = false;
  bool send_pending = false;
};

} // namespace

SimReport simulate(const ModelProfile &model, const DevicePool &pool,
                   const Plan &plan, const SimConfig &config) {
  std::vector<Violation> violations = validate_plan(model, pool, plan);
  if (!violations.empty()) {
    throw InfeasibleError("cannot simulate infeasible plan: " +
                          describe(violations));
  }
  if (config.microbatch_count < 1) {
    throw InvalidArgument("microbatch_count must be >= 1");
  }
  if (config.microbatch_size < 1) {
    throw InvalidArgument("microbatch_size must be >= 1");
  }
  int stage_count = static_cast<int>(plan.stages.size());
  int warmup = config.warmup_exclusion.value_or(stage_count);
  if (warmup < 0) {
    throw InvalidArgument("warmup_exclusion must be >= 0");
  }
  if (config.microbatch_count - warmup < 2) {
    std::ostringstream os;
    os << "steady-state metrics need at least two post-warmup completions: "
       << config.microbatch_count << " microbatches, warmup " << warmup;
    throw InvalidArgument(os.str());
  }

  int total = config.microbatch_count;
  std::vector<StageState> stages(static_cast<std::size_t>(stage_count));
  std::vector<LinkState> links(
      static_cast<std::size_t>(std::max(0, stage_count - 1)));
  for (int s = 0; s < stage_count; ++s) {
    const Stage &stage = plan.stages[static_cast<std::size_t>(s)];
    int dev = pool.index_of(stage.device_id);
    stages[static_cast<std::size_t>(s)].comp_time =
        t_comp(model, stage.first_layer, stage.last_layer, pool.device(dev),
               config.microbatch_size);
    if (s + 1 < stage_count) {
      int next = pool.index_of(plan.stages[static_cast<std::size_t>(s + 1)]
                                   .device_id);
      links[static_cast<std::size_t>(s)].comm_time =
          t_comm(pool, dev, next,
                 boundary_bytes(model, stage.last_layer,
                                config.microbatch_size));
    }
  }
  stages[0].received = total; // the source is co-located with stage 0

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, LaterThan> queue;
  SimReport report;
  report.microbatch_count = total;
  report.microbatch_size = config.microbatch_size;
  report.warmup_exclusion = warmup;
  report.events.reserve(static_cast<std::size_t>(4 * stage_count * total));
  std::vector<double> completions;
  completions.reserve(static_cast<std::size_t>(total));

  auto try_start_compute = [&](int s, double now) {
    StageState &st = stages[static_cast<std::size_t>(s)];
    if (!st.computing && !st.start_pending && st.next_compute < total &&
        st.next_compute < st.received) {
      st.start_pending = true;
      queue.push({now, SimEventKind::ComputeStart, s, st.next_compute});
    }
  };
  auto try_start_send = [&](int s, double now) {
    LinkState &ln = links[static_cast<std::size_t>(s)];
    if (!ln.sending && !ln.send_pending && ln.next_send < ln.enqueued) {
      ln.send_pending = true;
      queue.push({now, SimEventKind::SendStart, s, ln.next_send});
    }
  };

  try_start_compute(0, 0.0);
  while (!queue.empty()) {
    QueuedEvent ev = queue.top();
    queue.pop();
    report.events.push_back({ev.kind, ev.stage, ev.microbatch, ev.t});
    StageState &st = stages[static_cast<std::size_t>(ev.stage)];
    switch (ev.kind) {
    case SimEventKind::ComputeStart: {
      st.start_pending = false;
      st.computing = true;
      st.started_at = ev.t;
      queue.push({ev.t + st.comp_time, SimEventKind::ComputeEnd, ev.stage,
                  ev.microbatch});
      break;
    }
    case SimEventKind::ComputeEnd: {
      st.computing = false;
      st.next_compute = ev.microbatch + 1;
      st.busy_s += ev.t - st.started_at;
      if (ev.stage + 1 < stage_count) {
        LinkState &ln = links[static_cast<std::size_t>(ev.stage)];
        ln.enqueued = ev.microbatch + 1;
        try_start_send(ev.stage, ev.t);
      } else {
        completions.push_back(ev.t);
      }
      try_start_compute(ev.stage, ev.t);
      break;
    }
    case SimEventKind::SendStart: {
      LinkState &ln = links[static_cast<std::size_t>(ev.stage)];
      ln.send_pending = false;
      ln.sending = true;
      queue.push({ev.t + ln.comm_time, SimEventKind::SendEnd, ev.stage,
                  ev.microbatch});
      break;
    }
    case SimEventKind::SendEnd: {
      LinkState &ln = links[static_cast<std::size_t>(ev.stage)];
      ln.sending = false;
      ln.next_send = ev.microbatch + 1;
      StageState &receiver = stages[static_cast<std::size_t>(ev.stage + 1)];
      receiver.received = ev.microbatch + 1;
      try_start_send(ev.stage, ev.t);
      try_start_compute(ev.stage + 1, ev.t);
      break;
    }
    }
  }

  if (static_cast<int>(completions.size()) != total) {
    throw InternalError("simulation ended with " +
                        std::to_string(completions.size()) + " of " +
                        std::to_string(total) + " completions");
  }
  report.makespan_s = completions.back();
  std::size_t w = static_cast<std::size_t>(warmup);
  report.steady_period_s =
      (completions.back() - completions[w]) /
      static_cast<double>(completions.size() - 1 - w);
  report.throughput_samples_per_s =
      static_cast<double>(config.microbatch_size) / report.steady_period_s;
  report.stage_busy_fraction.resize(static_cast<std::size_t>(stage_count));
  for (int s = 0; s < stage_count; ++s) {
    report.stage_busy_fraction[static_cast<std::size_t>(s)] =
        stages[static_cast<std::size_t>(s)].busy_s / report.makespan_s;
  }
  return report;
}

SteadyStateCheck steady_state_check(const ModelProfile &model,
                                    const DevicePool &pool, const Plan &plan,
                                    const SimConfig &config) {
  int stage_count = static_cast<int>(plan.stages.size());
  if (config.microbatch_count < 10 * stage_count) {
    std::ostringstream os;
    os << "steady_state_check needs at least 10 microbatches per stage: got "
       << config.microbatch_count << " for " << stage_count << " stages";
    throw InvalidArgument(os.str());
  }
  SteadyStateCheck check;
  check.analytic_period_s = plan_period(model, pool, plan);
  check.simulated_period_s = simulate(model, pool, plan, config).steady_period_s;
  double diff = std::abs(check.simulated_period_s - check.analytic_period_s);
  check.relative_error =
      check.analytic_period_s > 0
          ? diff / check.analytic_period_s
          : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return check;
}

std::vector<SweepPoint> sweep_microbatch(const ModelProfile &model,
                                         const DevicePool &pool,
                                         const PlannerFn &planner,
                                         const std::vector<int> &sizes,
                                         int microbatch_count) {
  if (sizes.empty()) {
    throw InvalidArgument("microbatch sweep needs at least one size");
  }
  std::vector<SweepPoint> curve;
  curve.reserve(sizes.size());
  for (int size : sizes) {
    PlannerResult planned = planner(model, pool, size);
    SimConfig config;
    config.microbatch_count = microbatch_count;
    config.microbatch_size = size;
    SimReport report = simulate(model, pool, planned.plan, config);
    SweepPoint point;
    point.microbatch_size = size;
    point.t_opt_s = planned.t_opt_s;
    point.predicted_throughput = planned.plan.predicted_throughput;
    point.simulated_throughput = report.throughput_samples_per_s;
    curve.push_back(point);
  }
  return curve;
}

} // namespace pipeplan
