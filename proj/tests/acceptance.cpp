// Copyright 2026 The Timetide Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "testing.hpp"
#include "timetide/frame.hpp"
#include "timetide/interpreter.hpp"
#include "timetide/lsn.hpp"
#include "timetide/runtime.hpp"
#include "timetide/verify.hpp"
#include "verdicts.hpp"

using namespace timetide;

namespace {

constexpr double kGoldenSeconds = 1.0;
constexpr double kPipelineSeconds = 1.0;
constexpr std::int64_t kMonitorTicks = 1000;
constexpr double kMonitorSeconds = 10.0;
constexpr std::int64_t kDeterminismRuns = 100;
constexpr std::int64_t kDeterminismTicks = 300;
constexpr double kDeterminismSeconds = 30.0;
constexpr double kEquivalenceSeconds = 120.0;
constexpr double kVerdictSeconds = 300.0;
constexpr int kTokenCases = 1000;
constexpr std::int64_t kMaxDelta = 16;
constexpr double kTokenSeconds = 5.0;
constexpr std::int64_t kLatencyTicks = 2000;
constexpr double kLinearFitTolerance = 0.25;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d %-28s %s  %s (%.2f s)\n", n, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(), since(t0));
  std::fflush(stdout);
}

Outcome timed(bool ok, double elapsed, double limit, std::string detail) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "; %.2f s of %.0f s", elapsed, limit);
  return {ok && elapsed < limit, detail + buf};
}

Outcome golden() {
  const auto t0 = Clock::now();
  const KTerm body =
      k::send(Expr::chan("y"), Expr::binary("+", Expr::chan("x"), Expr::lit(Value(std::int64_t{1}))));
  const KTerm lowered = lower_task({4, 2, 1}, body, {"x"});
  const KTerm expected = k::loop(
      k::seq({
          k::sync(1),
          k::assign("latch_x", Expr::chan("x")),
          k::sync(2),
          k::send(Expr::chan("y"), Expr::binary("+", Expr::ident("latch_x"), Expr::lit(Value(std::int64_t{1})))),
          k::sync(1),
      }),
      TaskInfo{TaskParams{4, 2, 1}});
  const bool ok = same_term(lowered, expected);
  return timed(ok, since(t0), kGoldenSeconds, ok ? "structurally equal" : "lowered term differs");
}

Outcome pipelining() {
  const auto t0 = Clock::now();
  const KernelProgram kp = tt_test::compile(R"(module toplevel:
  var n : int = 0 in
    task(period=2, duration=3, offset=0): n = n + 1; end task;
  end var;
end module;
)");
  bool ok = kp.threads.size() == 3;
  std::string detail = std::to_string(kp.threads.size()) + " replicas";
  for (std::size_t j = 0; ok && j < kp.threads.size(); ++j) {
    const KNode* loop = nullptr;
    std::function<void(const KTerm&)> find = [&](const KTerm& t) {
      if (!loop && t->kind == KKind::kLoop) loop = t.get();
      for (const auto& i : t->items) find(i);
    };
    find(kp.threads[j].body);
    ok = loop && loop->task && loop->task->params.period == 6 && loop->task->params.duration == 3 &&
         loop->task->params.offset == static_cast<std::int64_t>(2 * j);
  }
  const auto r = run_centralised(kp, Schedule::round_robin(), 60);
  std::vector<std::int64_t> done;
  for (const auto& rec : r.trace)
    if (rec.kind == TraceRecord::Kind::kComplete) done.push_back(rec.theta);
  std::sort(done.begin(), done.end());
  std::vector<std::int64_t> expected;
  for (std::int64_t release = 0; release + 3 <= 60; release += 2) expected.push_back(release + 3);
  ok = ok && done == expected;
  detail += ", " + std::to_string(done.size()) + " completions every 2 ticks from tick 3";
  return timed(ok, since(t0), kPipelineSeconds, detail);
}

Outcome monitor() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::int64_t pops = 0, quiescent = 0;
  std::string detail;
  for (const char* name : {"trading", "cruise", "sensor"}) {
    const KernelProgram kp = tt_test::compile_corpus(name);
    CentralRuntime rt(kp, kMonitorTicks);
    LaneMonitor m(rt.lanes());
    Configuration c = rt.initial(nullptr);
    std::mt19937_64 rng(7);
    while (!rt.done(c)) {
      const auto enabled = rt.enabled_threads(c);
      if (enabled.empty()) {
        ok = false;
        detail += std::string(name) + " deadlocked; ";
        break;
      }
      rt.react(c, enabled[rng() % enabled.size()], nullptr, &m);
      // len = δ + θ_w − θ_r on every lane
      for (std::size_t l = 0; l < rt.lanes().size(); ++l) {
        const LaneInfo& lane = rt.lanes()[l];
        if (lane.writers.size() != 1) continue;
        const auto& w = c.threads[static_cast<std::size_t>(lane.writers[0])];
        const auto& rd = c.threads[static_cast<std::size_t>(lane.reader)];
        if (w.terminated) continue;
        if (static_cast<std::int64_t>(c.lanes[l].size()) != lane.delta + w.theta - rd.theta) ok = false;
      }
      ++quiescent;
    }
    for (const auto& s : c.threads) ok = ok && s.theta == kMonitorTicks;
    if (!m.violations().empty()) {
      ok = false;
      detail += std::string(name) + ": " + m.violations().front() + "; ";
    }
    pops += m.checked_pops();
  }
  detail += std::to_string(pops) + " pops checked, occupancy held at " + std::to_string(quiescent) + " points";
  return timed(ok, since(t0), kMonitorSeconds, detail);
}

Outcome determinism() {
  const auto t0 = Clock::now();
  DeterminismOptions o;
  o.runs = kDeterminismRuns;
  const Verdict v = check_determinism(tt_test::compile_corpus("trading"), kDeterminismTicks, o);
  const bool ok = v.status == VerdictStatus::kPass && v.runs == kDeterminismRuns;
  return timed(ok, since(t0), kDeterminismSeconds,
               std::to_string(v.runs) + " schedules, " + status_name(v.status) + (ok ? "" : ": " + v.message));
}

Outcome equivalence() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& [name, ticks] : std::vector<std::pair<std::string, std::int64_t>>{
           {"trading", 10000}, {"cruise", 1000}, {"sensor", 1000}}) {
    const KernelProgram kp = tt_test::compile_corpus(name);
    const LsnTopology lsn = tt_test::corpus_topology(name);
    const Mapping gamma = tt_test::corpus_mapping(name);
    const auto central = run_centralised(kp, Schedule::round_robin(), ticks);
    const auto want = projection_text(central.trace);
    for (const Transport tr : {Transport::kInProcess, Transport::kSocket}) {
      SimOptions o;
      o.transport = tr;
      const auto sim = simulate_distributed(kp, lsn, gamma, ticks, o);
      const bool same = projection_text(sim.merged) == want;
      ok = ok && same;
      if (!same) detail += name + (tr == Transport::kSocket ? " socket: " : " in-process: ") +
                           first_divergence(central.trace, sim.merged) + "; ";
    }
    detail += name + " (" + std::to_string(kp.threads.size()) + " threads, " + std::to_string(lsn.nodes.size()) +
              " nodes, " + std::to_string(ticks) + " ticks) ";
  }
  return timed(ok, since(t0), kEquivalenceSeconds, detail + (ok ? "identical" : "differ"));
}

Outcome verdicts() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& c : tt_test::verdict_cases()) {
    const Verdict v = tt_test::run_case(c);
    bool row = v.status == c.expected;
    if (v.status == VerdictStatus::kFail) {
      const auto replay = run_centralised(tt_test::compose_case(c), Schedule::replay_of(v.order), c.bound);
      row = row && tt_test::raised(replay.trace, c.violation);
    }
    ok = ok && row;
    detail += std::string(status_name(v.status)) + (row ? "" : "(!)") + " ";
  }
  return timed(ok, since(t0), kVerdictSeconds, detail);
}

// The m-th pop of a channel with delay δ returns the (m − δ)-th push, or an
// initial token for m < δ: the declared value first, then empty frames.
Outcome initial_tokens_law() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::int64_t> delta_dist(0, kMaxDelta);
  std::uniform_int_distribution<int> len_dist(0, 64);
  std::uniform_int_distribution<std::int64_t> value_dist(-1000, 1000);
  int bad = 0;
  for (int n = 0; n < kTokenCases; ++n) {
    const std::int64_t delta = delta_dist(rng);
    const bool has_init = rng() % 2 == 0;
    const Value init = has_init ? Value(value_dist(rng)) : Value();
    std::vector<Value> pushes(static_cast<std::size_t>(len_dist(rng)));
    for (auto& v : pushes) v = rng() % 4 == 0 ? Value() : Value(value_dist(rng));

    FrameQueue q;
    q.fill(init_channel(delta, init));
    const std::vector<Value> runtime_tokens = initial_tokens(delta, init);
    const std::deque<Value> queued = init_channel(delta, init);
    if (!std::equal(queued.begin(), queued.end(), runtime_tokens.begin(), runtime_tokens.end())) ++bad;
    std::vector<Value> popped;
    std::size_t w = 0;
    // the reader may lead by at most δ frames; interleave at random
    while (popped.size() < pushes.size()) {
      const bool can_pop = static_cast<std::int64_t>(popped.size()) < static_cast<std::int64_t>(w) + delta;
      const bool can_push = w < pushes.size();
      if (can_pop && (!can_push || rng() % 2 == 0)) {
        auto v = q.try_pop(FrameQueue::Clock::now());
        if (!v) {
          ++bad;
          break;
        }
        popped.push_back(*v);
      } else {
        q.push(pushes[w++]);
      }
    }
    for (std::size_t m = 0; m < popped.size(); ++m) {
      const auto mi = static_cast<std::int64_t>(m);
      const Value want = mi < delta ? (mi == 0 ? init : Value()) : pushes[static_cast<std::size_t>(mi - delta)];
      if (!(popped[m] == want)) {
        ++bad;
        break;
      }
    }
    if (static_cast<std::int64_t>(runtime_tokens.size()) != delta) ++bad;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(runtime_tokens.size()); ++i)
      if (!(runtime_tokens[static_cast<std::size_t>(i)] == (i == 0 ? init : Value()))) ++bad;
  }
  return timed(bad == 0, since(t0), kTokenSeconds,
               std::to_string(kTokenCases) + " cases, " + std::to_string(bad) + " mismatches");
}

Outcome latency_shape() {
  const KernelProgram kp = tt_test::compile_corpus("trading");
  const LsnTopology lsn = tt_test::corpus_topology("trading");
  const Mapping gamma = tt_test::corpus_mapping("trading");
  const std::vector<double> ls = {0, 5, 10};
  std::vector<double> wall;
  std::vector<std::string> traces;
  bool ok = true;
  for (const double l : ls) {
    SimOptions o;
    o.transport = Transport::kSocket;
    o.latency_ms = static_cast<std::int64_t>(l);
    o.watchdog_seconds = 120;
    const auto sim = simulate_distributed(kp, lsn, gamma, kLatencyTicks, o);
    for (const auto& [node, clock] : sim.clocks) ok = ok && clock == kLatencyTicks;
    wall.push_back(sim.wall_seconds);
    traces.push_back(trace_to_jsonl(sim.merged));
  }
  ok = ok && traces[0] == traces[1] && traces[1] == traces[2];
  // least-squares line through (L, wall)
  const double n = static_cast<double>(ls.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    sx += ls[i];
    sy += wall[i];
    sxx += ls[i] * ls[i];
    sxy += ls[i] * wall[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icept = (sy - slope * sx) / n;
  double worst = 0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const double fit = icept + slope * ls[i];
    worst = std::max(worst, std::abs(wall[i] - fit) / std::max(fit, 1e-9));
  }
  ok = ok && worst <= kLinearFitTolerance;
  char buf[200];
  std::snprintf(buf, sizeof buf, "wall %.2f/%.2f/%.2f s at L=0/5/10 ms, fit %.3f+%.3f*L, worst residual %.1f%%",
                wall[0], wall[1], wall[2], icept, slope, 100 * worst);
  return {ok, std::to_string(kLatencyTicks) + " ticks each, " + buf};
}

}  // namespace

int main() {
  report(1, "task lowering golden", golden);
  report(2, "pipelining golden", pipelining);
  report(3, "channel-delay monitor", monitor);
  report(4, "determinism", determinism);
  report(5, "distributed equivalence", equivalence);
  report(6, "verdicts", verdicts);
  report(7, "initial tokens", initial_tokens_law);
  report(8, "latency shape", latency_shape);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
