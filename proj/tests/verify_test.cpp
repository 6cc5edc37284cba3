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

#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "timetide/interpreter.hpp"
#include "timetide/runtime.hpp"
#include "timetide/verify.hpp"
#include "verdicts.hpp"

using namespace timetide;

namespace {

const char* kTwoWriters = R"(module toplevel:
  channel c : int delay 1;
  run W(c, 1) <> run W(c, 2) <> run R(c)
end module;
module W:
  output c : int;
  input id : int;
  task(period=1, duration=1):
    send c(id);
  end task;
end module;
module R:
  input c : int;
  var last : int = 0 in
    task(period=1, duration=1):
      if (fresh(c)) { last = c; }
    end task;
  end var;
end module;
)";

const char* kPeriods = R"(module toplevel:
  channel a : int delay 7;
  run P(a) <> run Q(a)
end module;
module P:
  output a : int;
  task(period=2, duration=1):
    send a(1);
  end task;
end module;
module Q:
  input a : int;
  task(period=3, duration=1):
    nothing;
  end task;
end module;
)";

SurfaceProgram constant_observer(bool value) {
  const std::string v = value ? "true" : "false";
  return parse_program("module Const:\n  input speed : float;\n  output V : boolean;\n"
                       "  task(period=1, duration=1):\n    send V(" + v + ");\n  end task;\nend module;\n");
}

KernelProgram with_observer(const std::string& program, const SurfaceProgram& observers,
                            const ObserverBinding& b) {
  const auto p = parse_program(tt_test::read_text(tt_test::corpus_path(program + ".tt")));
  return to_kernel(resolve_constants(compose_observer(p, observers, b), {}));
}

}  // namespace

TEST_CASE("hyperperiod of the trading program") {
  const Hyperperiod h = hyperperiod(tt_test::compile_corpus("trading"));
  CHECK(h.periodic);
  CHECK(h.h == std::lcm(10, 6));
}

TEST_CASE("prelude rounds offsets and delays up to whole hyperperiods") {
  const Hyperperiod h = hyperperiod(tt_test::compile(kPeriods));
  CHECK(h.h == std::lcm(2, 3));
  const std::int64_t raw = 7;
  CHECK(h.prelude == (raw + h.h - 1) / h.h * h.h);
  CHECK(h.prelude == 12);
}

TEST_CASE("corpus programs are deterministic") {
  DeterminismOptions o;
  o.runs = 12;
  for (const char* name : {"trading", "cruise", "sensor"}) {
    CAPTURE(name);
    const Verdict v = check_determinism(tt_test::compile_corpus(name), 120, o);
    CHECK(v.status == VerdictStatus::kPass);
    CHECK(v.runs == 12);
  }
}

TEST_CASE("determinism schedules start with round-robin and greedy orders") {
  const auto s = determinism_schedules(tt_test::compile_corpus("trading"), 10, 1);
  CHECK(s.size() == 10);
}

TEST_CASE("unmerged writers sharing a channel break determinism") {
  KernelOptions ko;
  ko.check_endpoints = false;
  const KernelProgram kp = tt_test::compile(kTwoWriters, {}, ko);
  DeterminismOptions o;
  o.runs = 20;
  const Verdict v = check_determinism(kp, 30, o);
  CHECK(v.status == VerdictStatus::kFail);
  CHECK_FALSE(v.message.empty());
}

TEST_CASE("the same program with endpoint checks is rejected") {
  CHECK_THROWS_AS(tt_test::compile(kTwoWriters), CompileError);
}

TEST_CASE("model checking reproduces the expected verdicts") {
  for (const auto& c : tt_test::verdict_cases()) {
    CAPTURE(c.label);
    const Verdict v = tt_test::run_case(c);
    CHECK(v.status == c.expected);
    CHECK(v.bound == c.bound);
    if (v.status == VerdictStatus::kPass) CHECK(v.states > 0);
  }
}

TEST_CASE("a counterexample replays to the same violation") {
  const auto& c = tt_test::verdict_cases().back();
  REQUIRE(c.expected == VerdictStatus::kFail);
  const KernelProgram kp = tt_test::compose_case(c);
  const Verdict v = tt_test::run_case(c);
  REQUIRE(v.status == VerdictStatus::kFail);
  REQUIRE(!v.order.empty());
  CHECK(tt_test::raised(v.counterexample, c.violation));
  const auto replay = run_centralised(kp, Schedule::replay_of(v.order), c.bound);
  CHECK(tt_test::raised(replay.trace, c.violation));
  const auto json = v.to_json();
  CHECK(json.at("status") == "FAIL");
  CHECK(json.contains("counterexample"));
}

TEST_CASE("random schedules agree with exhaustive search") {
  for (const auto& c : tt_test::verdict_cases()) {
    CAPTURE(c.label);
    const KernelProgram kp = tt_test::compose_case(c);
    bool any = false;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      any = any || tt_test::raised(run_centralised(kp, Schedule::random(seed), c.bound).trace, c.violation);
    // determinism makes every schedule reach the same verdict
    CHECK(any == (c.expected == VerdictStatus::kFail));
  }
}

TEST_CASE("an observer that never raises passes") {
  ObserverBinding b{"Const", {{"speed", "speed"}}, "V"};
  const KernelProgram kp = with_observer("cruise", constant_observer(false), b);
  SafetyOptions o;
  o.bound = 60;
  CHECK(check_safety(kp, "V", o).status == VerdictStatus::kPass);
  o.bound = 20;
  const Verdict short_run = check_safety(kp, "V", o);
  CHECK(short_run.status == VerdictStatus::kInconclusive);
  CHECK(short_run.message.find("hyperperiod") != std::string::npos);
}

TEST_CASE("an observer that always raises fails at its first deadline") {
  ObserverBinding b{"Const", {{"speed", "speed"}}, "V"};
  const KernelProgram kp = with_observer("cruise", constant_observer(true), b);
  SafetyOptions o;
  o.bound = 20;
  const Verdict v = check_safety(kp, "V", o);
  REQUIRE(v.status == VerdictStatus::kFail);
  REQUIRE(tt_test::raised(v.counterexample, "V"));
  for (const auto& r : v.counterexample)
    if (r.chan == "V") CHECK(r.theta == 1);
  CHECK(v.order.back().first == "Const");
}

TEST_CASE("a tiny state budget is inconclusive") {
  auto c = tt_test::verdict_cases().front();
  SafetyOptions o;
  o.bound = c.bound;
  o.max_states = 50;
  CHECK(check_safety(tt_test::compose_case(c), c.violation, o).status == VerdictStatus::kInconclusive);
}

TEST_CASE("observers do not disturb the observed threads") {
  const auto& c = tt_test::verdict_cases()[2];
  const KernelProgram plain = tt_test::compile_corpus("cruise");
  const KernelProgram watched = tt_test::compose_case(c);
  const auto a = projection_text(run_centralised(plain, Schedule::round_robin(), 100).trace);
  const auto b = projection_text(run_centralised(watched, Schedule::round_robin(), 100).trace);
  for (const auto& [thread, text] : a) {
    CAPTURE(thread);
    REQUIRE(b.count(thread));
    CHECK(b.at(thread) == text);
  }
  CHECK(b.size() == a.size() + 1);
}

TEST_CASE("binding errors") {
  const auto obs = constant_observer(false);
  CHECK_THROWS_AS(with_observer("cruise", obs, ObserverBinding{"Const", {{"speed", "nope"}}, "V"}), CompileError);
  CHECK_THROWS_AS(with_observer("cruise", obs, ObserverBinding{"Const", {{"speed", "speed"}}, "speed"}),
                  CompileError);
  CHECK_THROWS_AS(with_observer("cruise", obs, ObserverBinding{"Missing", {}, "V"}), CompileError);
  CHECK_THROWS_AS(check_safety(tt_test::compile_corpus("cruise"), "V"), CompileError);
}

TEST_CASE("first divergence names the thread") {
  const KernelProgram kp = tt_test::compile_corpus("cruise");
  const Trace a = run_centralised(kp, Schedule::round_robin(), 50).trace;
  Trace b = a;
  CHECK(first_divergence(a, b).empty());
  REQUIRE(!b.empty());
  b.back().value = Value(std::int64_t{-1});
  CHECK(first_divergence(a, b).find(b.back().thread) != std::string::npos);
}
