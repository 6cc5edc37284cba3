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
#include "timetide/desugar.hpp"
#include "timetide/kernel.hpp"
#include "timetide/parser.hpp"
#include "timetide/runtime.hpp"

using namespace timetide;

namespace {

Stmt parsed_body(const std::string& body) {
  return parse_program("module toplevel:\n" + body + "\nend module;\n").entry_module().body;
}

std::string code_of(const std::string& source) {
  try {
    tt_test::compile(source);
  } catch (const CompileError& e) {
    return e.diagnostics().at(0).code;
  }
  return "";
}

// Flattens nested seq nodes so structural checks do not depend on grouping.
void flatten(const KTerm& t, std::vector<KTerm>& out) {
  if (t->kind == KKind::kSeq) {
    for (const auto& i : t->items) flatten(i, out);
  } else if (t->kind != KKind::kNothing) {
    out.push_back(t);
  }
}

std::vector<KTerm> flat(const KTerm& t) {
  std::vector<KTerm> out;
  flatten(t, out);
  return out;
}

const KNode* find_loop(const KTerm& t) {
  if (t->kind == KKind::kLoop) return t.get();
  for (const auto& i : t->items)
    if (const KNode* l = find_loop(i)) return l;
  return nullptr;
}

std::vector<std::int64_t> sync_amounts(const KTerm& t) {
  std::vector<std::int64_t> out;
  std::function<void(const KTerm&)> walk = [&](const KTerm& n) {
    if (n->kind == KKind::kSync) out.push_back(n->amount);
    for (const auto& i : n->items) walk(i);
  };
  walk(t);
  return out;
}

}  // namespace

TEST_CASE("the offset task lowers to latch, wait, send and idle") {
  // send y(x + 1) with x an input channel
  const KTerm body = k::send(Expr::chan("y"), Expr::binary("+", Expr::chan("x"), Expr::lit(Value(std::int64_t{1}))));
  const KTerm lowered = lower_task({4, 2, 1}, body, {"x"});
  const KTerm expected = k::loop(k::seq({
      k::sync(1),
      k::assign("latch_x", Expr::chan("x")),
      k::sync(2),
      k::send(Expr::chan("y"), Expr::binary("+", Expr::ident("latch_x"), Expr::lit(Value(std::int64_t{1})))),
      k::sync(1),
  }), TaskInfo{TaskParams{4, 2, 1}});
  CHECK(same_term(lowered, expected));
}

TEST_CASE("a unit task with an empty body is a bare sync loop") {
  const KTerm lowered = lower_task({1, 1, 0}, k::nothing(), {});
  CHECK(same_term(lowered, k::loop(k::seq({k::sync(1), k::nothing()}), TaskInfo{TaskParams{1, 1, 0}})));
  CHECK(sync_amounts(lowered) == std::vector<std::int64_t>{1});
}

TEST_CASE("the center task latches, waits its duration, runs, then idles out the period") {
  const KernelProgram kp = tt_test::compile_corpus("trading");
  const KThread* center = kp.find_thread("Center");
  REQUIRE(center);
  const KNode* loop = find_loop(center->body);
  REQUIRE(loop);
  REQUIRE(loop->task);
  const auto items = flat(loop->items[0]);
  const std::int64_t p = 10, d = 7, o = 0;
  std::size_t i = 0;
  while (i < items.size() && items[i]->kind == KKind::kAssign) {
    CHECK(items[i]->name.rfind("latch", 0) == 0);
    ++i;
  }
  CHECK(i > 0);
  REQUIRE(i < items.size());
  CHECK(items[i]->kind == KKind::kSync);
  CHECK(items[i]->amount == d);
  CHECK(items.back()->kind == KKind::kSync);
  CHECK(items.back()->amount == p - d - o);
}

TEST_CASE("lower_task rejects an offset that overruns the period only before pipelining") {
  CHECK_THROWS_AS(lower_task({2, 3, 0}, k::nothing(), {}), CompileError);
  CHECK_THROWS_AS(lower_task({0, 1, 0}, k::nothing(), {}), CompileError);
}

TEST_CASE("offsets beyond the period become a one-time prefix") {
  const KTerm t = lower_task({4, 2, 5}, k::nothing(), {});
  const auto items = flat(t);
  REQUIRE(items.size() == 2);
  CHECK(items[0]->kind == KKind::kSync);
  CHECK(items[0]->amount == 4);
  REQUIRE(items[1]->kind == KKind::kLoop);
  CHECK(sync_total(items[1]->items[0]) == std::optional<std::int64_t>(4));
  CHECK(sync_amounts(items[1]->items[0]).front() == 1);
}

TEST_CASE("pipeline replica parameters follow lcm(d, p) / p") {
  for (const TaskParams in : {TaskParams{2, 3, 0}, TaskParams{4, 6, 0}, TaskParams{4, 2, 0}, TaskParams{5, 7, 1}}) {
    CAPTURE(in.period);
    CAPTURE(in.duration);
    const auto out = pipeline_params(in);
    if (in.duration <= in.period) {
      REQUIRE(out.size() == 1);
      CHECK(out[0] == in);
      continue;
    }
    const std::int64_t l = std::lcm(in.duration, in.period);
    REQUIRE(out.size() == static_cast<std::size_t>(l / in.period));
    for (std::size_t j = 0; j < out.size(); ++j) {
      CHECK(out[j].period == l);
      CHECK(out[j].duration == in.duration);
      CHECK(out[j].offset == in.offset + static_cast<std::int64_t>(j) * in.period);
    }
  }
  const auto staggered = pipeline_params({2, 3, 0});
  REQUIRE(staggered.size() == 3);
  CHECK(staggered[0] == TaskParams{6, 3, 0});
  CHECK(staggered[1] == TaskParams{6, 3, 2});
  CHECK(staggered[2] == TaskParams{6, 3, 4});
  const auto six = pipeline_params({4, 6, 0});
  REQUIRE(six.size() == 3);
  CHECK(six[2] == TaskParams{12, 6, 8});
}

TEST_CASE("strong abort checks after every sync") {
  const Expr c = Expr::ident("c");
  const KTerm s = k::expr(Expr::ident("s"));
  const KTerm got = insert_checkaborts(k::abort(c, "L", k::seq({k::sync(1), s, k::sync(1), s})));
  const KTerm want = k::abort(
      c, "L", k::seq({k::sync(1), k::checkabort(c, "L"), s, k::sync(1), k::checkabort(c, "L"), s}));
  CHECK(same_term(k::seq(flat(got->items[0])), k::seq(flat(want->items[0]))));
}

TEST_CASE("weak abort checks before every sync but the first") {
  const Expr c = Expr::ident("c");
  const KTerm s = k::expr(Expr::ident("s"));
  const KTerm got = insert_checkaborts(k::abort(c, "L", k::seq({k::sync(1), s, k::sync(1)}), true));
  const auto items = flat(got->items[0]);
  REQUIRE(items.size() == 4);
  CHECK(items[0]->kind == KKind::kSync);
  CHECK(items[1]->kind == KKind::kExpr);
  CHECK(items[2]->kind == KKind::kCheckAbort);
  CHECK(items[3]->kind == KKind::kSync);
}

TEST_CASE("immediate strong abort also checks first") {
  const Expr c = Expr::ident("c");
  const KTerm s = k::expr(Expr::ident("s"));
  const KTerm got = insert_checkaborts(k::abort(c, "L", k::seq({s, k::sync(1)}), false, true));
  const auto items = flat(got->items[0]);
  REQUIRE(items.size() == 4);
  CHECK(items[0]->kind == KKind::kCheckAbort);
  CHECK(items[1]->kind == KKind::kExpr);
  CHECK(items[2]->kind == KKind::kSync);
  CHECK(items[3]->kind == KKind::kCheckAbort);
}

TEST_CASE("outer abort checks come before inner ones") {
  const KTerm s = k::expr(Expr::ident("s"));
  const KTerm got = insert_checkaborts(
      k::abort(Expr::ident("c"), "O", k::abort(Expr::ident("e"), "I", k::seq({k::sync(1), s}))));
  const auto inner = flat(got->items[0]->items[0]);
  REQUIRE(inner.size() == 4);
  CHECK(inner[1]->kind == KKind::kCheckAbort);
  CHECK(inner[1]->name == "O");
  CHECK(inner[2]->name == "I");
}

TEST_CASE("checkabort insertion preserves sync amounts") {
  const Expr c = Expr::ident("c");
  const KTerm s = k::expr(Expr::ident("s"));
  const std::vector<KTerm> bodies = {
      k::seq({k::sync(2), s, k::sync(3)}),
      k::seq({s, k::if_(c, k::seq({k::sync(1), s}), k::sync(4)), k::sync(1)}),
      k::loop(k::seq({k::sync(1), s})),
  };
  for (const auto& b : bodies) {
    for (bool weak : {false, true}) {
      for (bool immediate : {false, true}) {
        const KTerm a = k::abort(c, "L", b, weak, immediate);
        CHECK(sync_amounts(insert_checkaborts(a)) == sync_amounts(a));
      }
    }
  }
}

TEST_CASE("pareach unrolls into a parallel composition") {
  SUBCASE("two") {
    const Stmt s = unroll_iterators(parsed_body("pareach i in 2 { run T(i/id); }"));
    REQUIRE(s.kind == StmtKind::kPar);
    REQUIRE(s.children.size() == 2);
    for (int i = 0; i < 2; ++i) {
      const Stmt& run = s.children[static_cast<std::size_t>(i)];
      REQUIRE(run.kind == StmtKind::kRun);
      CHECK(run.bindings.at(0).actual.literal == Value(std::int64_t{i}));
    }
  }
  SUBCASE("one") {
    const Stmt s = unroll_iterators(parsed_body("pareach i in 1 { run T(i/id); }"));
    CHECK(s.kind == StmtKind::kRun);
    CHECK(s.bindings.at(0).actual.literal == Value(std::int64_t{0}));
  }
  SUBCASE("zero") {
    CHECK(unroll_iterators(parsed_body("pareach i in 0 { run T(i/id); }")).kind == StmtKind::kNothing);
    CHECK(unroll_iterators(parsed_body("foreach i in 0 { run T(i/id); }")).kind == StmtKind::kNothing);
  }
  SUBCASE("foreach is sequential") {
    const Stmt s = unroll_iterators(parsed_body("foreach i in 3 { x = i; }"));
    REQUIRE(s.kind == StmtKind::kBlock);
    CHECK(s.children.size() == 3);
  }
}

TEST_CASE("instantiation inlines modules with their bindings") {
  const SurfaceProgram p = instantiate_modules(
      resolve_constants(parse_program(tt_test::read_text(tt_test::corpus_path("trading.tt")))));
  const KernelProgram kp = tt_test::compile_corpus("trading");
  const std::string printed = print_kernel(kp);
  CHECK(printed.find("thread Center:") != std::string::npos);
  CHECK(printed.find("fresh(orders.0)") != std::string::npos);
  CHECK(printed.find("send fills.1(") != std::string::npos);
  bool found = false;
  std::function<void(const Stmt&)> walk = [&](const Stmt& s) {
    if (s.kind == StmtKind::kInstance && s.name == "Center") found = true;
    for (const auto& c : s.children) walk(c);
  };
  walk(p.entry_module().body);
  CHECK(found);
}

TEST_CASE("a port-less module is copied verbatim") {
  const char* src = R"(module toplevel:
  run Idle()
end module;
module Idle:
  task(period=3, duration=1): nothing; end task;
end module;
)";
  const KernelProgram kp = tt_test::compile(src);
  REQUIRE(kp.threads.size() == 1);
  const KNode* loop = find_loop(kp.threads[0].body);
  REQUIRE(loop);
  CHECK(sync_total(loop->items[0]) == std::optional<std::int64_t>(3));
}

TEST_CASE("recursive instantiation is rejected") {
  const char* src = R"(module toplevel:
  run A()
end module;
module A:
  run B()
end module;
module B:
  run A()
end module;
)";
  CHECK(code_of(src) == "E-cycle");
}

TEST_CASE("an unbound port is rejected") {
  const char* src = R"(module toplevel:
  channel c : int delay 1;
  run W(c/o) <> run R()
end module;
module W:
  output o : int;
  task(period=1, duration=1): send o(1); end task;
end module;
module R:
  input i : int;
  task(period=1, duration=1): i; end task;
end module;
)";
  CHECK(code_of(src) == "E-unbound-port");
}

TEST_CASE("thread counts of the corpus programs") {
  CHECK(tt_test::compile_corpus("trading").threads.size() == 3);
  CHECK(tt_test::compile_corpus("sensor").threads.size() == 9);
  CHECK(tt_test::compile_corpus("cruise").threads.size() == 4);
  const char* single = R"(module toplevel:
  task(period=2, duration=1): nothing; end task;
end module;
)";
  CHECK(tt_test::compile(single).threads.size() == 1);
}

TEST_CASE("every lowered loop syncs exactly its period per iteration") {
  for (const char* name : {"trading", "cruise", "sensor"}) {
    CAPTURE(name);
    const KernelProgram kp = tt_test::compile_corpus(name);
    for (const auto& t : kp.threads) {
      const KNode* loop = find_loop(t.body);
      REQUIRE(loop);
      REQUIRE(loop->task);
      CHECK(sync_total(loop->items[0]) == std::optional<std::int64_t>(loop->task->params.period));
      CHECK(always_syncs(loop->items[0]));
    }
  }
}

TEST_CASE("lowering is deterministic") {
  const std::string src = tt_test::read_text(tt_test::corpus_path("sensor.tt"));
  CHECK(print_kernel(tt_test::compile(src)) == print_kernel(tt_test::compile(src)));
}

TEST_CASE("a duration beyond the period pipelines instead of failing") {
  const char* src = R"(module toplevel:
  channel c : int delay 1;
  run P(c/o) <> run Q(c/i)
end module;
module P:
  output o : int;
  task(period=2, duration=3): send o(1); end task;
end module;
module Q:
  input i : int;
  task(period=1, duration=1): i; end task;
end module;
)";
  CHECK(code_of(src) == "");
}

TEST_CASE("pipelined task completes one body per period once filled") {
  const char* src = R"(module toplevel:
  var n : int = 0 in
    task(period=2, duration=3, offset=0): n = n + 1; end task;
  end var;
end module;
)";
  const KernelProgram kp = tt_test::compile(src);
  REQUIRE(kp.threads.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    const KNode* loop = find_loop(kp.threads[j].body);
    REQUIRE(loop);
    CHECK(loop->task->params.period == 6);
    CHECK(loop->task->params.offset == static_cast<std::int64_t>(2 * j));
  }
  const auto r = run_centralised(kp, Schedule::round_robin(), 60);
  std::vector<std::int64_t> done;
  for (const auto& rec : r.trace)
    if (rec.kind == TraceRecord::Kind::kComplete) done.push_back(rec.theta);
  std::sort(done.begin(), done.end());
  // replica j releases at 6m + 2j and completes 3 ticks later
  std::vector<std::int64_t> expected;
  for (std::int64_t t = 0; t + 3 <= 60; t += 2) expected.push_back(t + 3);
  CHECK(done == expected);
}

TEST_CASE("an offset past the period compiles with a warning") {
  const char* src = R"(module toplevel:
  var n : int = 0 in
    task(period=4, duration=1, offset=9): n = n + 1; end task;
  end var;
end module;
)";
  std::vector<Diagnostic> warnings;
  KernelOptions ko;
  ko.warnings = &warnings;
  const KernelProgram kp = tt_test::compile(src, {}, ko);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].severity == Severity::kWarning);
  CHECK(warnings[0].code == "W-offset");
  CHECK(kp.threads.size() == 1);
}
