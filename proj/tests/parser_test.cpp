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

#include <string>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "timetide/ast_json.hpp"
#include "timetide/constants.hpp"
#include "timetide/desugar.hpp"
#include "timetide/diagnostics.hpp"
#include "timetide/parser.hpp"

using namespace timetide;

namespace {

const char* kToplevel = R"(module toplevel:
	const TRADERS : int = 2;
	channel orders : Order[TRADERS] delay 5;
	channel fills : MatchedOrders[TRADERS] delay 7;
	channel spreads : Spread[TRADERS] delay 7;
	{
		run Center(TRADERS/TRADERS, orders/orders, fills/fills, spreads/spreads);
	}
	<>
	pareach i in TRADERS {
		run Trader(spreads[i]/price_spread, orders[i]/order, fills[i]/fill, i/id);
	}
end module;
)";

const char* kTrader = R"(module Trader:
	input price_spread : Spread;
	output order : Order;
	input fill : MatchedOrders;
	input id : integer;
	var balance : float = 1000.0 in
		var outstanding : OrderList = OrderList_create(id) in
			task(period=6, duration=3):
				if (fresh(fill)) {
					var change : float = update_orders(fill, outstanding, id) in
						balance = balance + change;
					end var;
				}
				if (fresh(price_spread)) {
					var new_order : Order = make_decision(price_spread,outstanding,balance,id) in
						if (should_do_trade(new_order)) {
							send order(new_order);
						}
					end var;
				}
			end task;
		end var;
	end var;
end module;
)";

std::string error_code(const std::string& source, bool full = true) {
  try {
    if (full) tt_test::compile(source);
    else parse_program(source);
  } catch (const CompileError& e) {
    return e.diagnostics().empty() ? "?" : e.diagnostics().front().code;
  }
  return "";
}

// Wraps `body` in a thread that owns channel `c` (written) and reads `d`.
std::string in_module(const std::string& decls, const std::string& body, const std::string& extra = "") {
  return "module toplevel:\n"
         "  channel c : int delay 1;\n"
         "  channel d : int delay 1;\n"
         "  run Src(d/out) <> run M(c/c, d/d" + extra + ") <> run Snk(c/inp)\n"
         "end module;\n"
         "module Src:\n  output out : int;\n  task(period=1, duration=1): send out(1); end task;\nend module;\n"
         "module Snk:\n  input inp : int;\n  task(period=1, duration=1): if (fresh(inp)) { inp; } end task;\nend module;\n"
         "module M:\n  output c : int;\n  input d : int;\n" +
         decls + body + "\nend module;\n";
}

}  // namespace

TEST_CASE("toplevel listing parses into one const, three channels and a run beside a pareach") {
  const SurfaceProgram p = parse_program(kToplevel);
  REQUIRE(p.modules.size() == 1);
  CHECK(p.entry == "toplevel");
  const ModuleDecl& m = p.modules[0];
  CHECK(m.consts.size() == 1);
  CHECK(m.channels.size() == 3);
  REQUIRE(m.body.kind == StmtKind::kPar);
  REQUIRE(m.body.children.size() == 2);
  const Stmt* left = &m.body.children[0];
  while (left->kind == StmtKind::kBlock && left->children.size() == 1) left = &left->children[0];
  CHECK(left->kind == StmtKind::kRun);
  CHECK(left->name == "Center");
  CHECK(m.body.children[1].kind == StmtKind::kPareach);
}

TEST_CASE("empty source is rejected") {
  try {
    parse_program("");
    FAIL("expected a diagnostic");
  } catch (const CompileError& e) {
    REQUIRE(!e.diagnostics().empty());
    CHECK(e.diagnostics()[0].message.find("no modules declared") != std::string::npos);
  }
}

TEST_CASE("trader listing has four ports, nested var blocks and a 6/3 task") {
  const SurfaceProgram p = parse_program(kTrader);
  REQUIRE(p.modules.size() == 1);
  const ModuleDecl& m = p.modules[0];
  CHECK(m.ports.size() == 4);
  REQUIRE(m.body.kind == StmtKind::kVar);
  CHECK(m.body.name == "balance");
  const Stmt& inner = m.body.children[0];
  REQUIRE(inner.kind == StmtKind::kVar);
  CHECK(inner.name == "outstanding");
  const Stmt& task = inner.children[0];
  REQUIRE(task.kind == StmtKind::kTask);
  const TaskParams tp = task_params(task);
  CHECK(tp.period == 6);
  CHECK(tp.duration == 3);
  CHECK(tp.offset == 0);
}

TEST_CASE("diagnostics carry file, line and column") {
  try {
    parse_program("module toplevel:\n  x = ;\nend module;\n");
    FAIL("expected a syntax error");
  } catch (const CompileError& e) {
    const std::string text = format_diagnostic(e.diagnostics().at(0), "f.tt");
    CHECK(text.rfind("f.tt:2:", 0) == 0);
    CHECK(text.find("E-syntax") != std::string::npos);
  }
}

TEST_CASE("duplicate module names are rejected") {
  CHECK(error_code("module a:\n nothing\nend module;\nmodule a:\n nothing\nend module;\n", false) == "E-dup-module");
}

TEST_CASE("resolve_constants substitutes entry constants into bounds and array sizes") {
  const SurfaceProgram p = parse_program(kToplevel);
  SUBCASE("declared default") {
    const SurfaceProgram r = resolve_constants(p);
    const ModuleDecl& m = r.entry_module();
    REQUIRE(m.body.children[1].kind == StmtKind::kPareach);
    const Expr& bound = m.body.children[1].exprs[0];
    REQUIRE(bound.kind == ExprKind::kLiteral);
    CHECK(bound.literal == Value(std::int64_t{2}));
    for (const auto& ch : m.channels) {
      REQUIRE(ch.type.array_size);
      CHECK(ch.type.array_size->literal == Value(std::int64_t{2}));
    }
  }
  SUBCASE("overridden from the command line") {
    const SurfaceProgram r = resolve_constants(p, parse_const_args({"TRADERS=3"}));
    CHECK(r.entry_module().body.children[1].exprs[0].literal == Value(std::int64_t{3}));
  }
}

TEST_CASE("foreach bound from a const, and from a var") {
  const std::string ok = in_module("  const X : int = 3;\n",
                                   "  var n : int = 0 in task(period=1, duration=1): foreach i in X { n = n + i; } "
                                   "send c(n); end task; end var;");
  const KernelProgram kp = tt_test::compile(ok);
  const std::string printed = print_kernel(kp);
  CHECK(printed.find("n = n + 2") != std::string::npos);
  CHECK(printed.find("n = n + 3") == std::string::npos);

  const std::string bad = in_module("", "  var y : int = 3 in task(period=1, duration=1): foreach i in y { send c(i); } "
                                        "end task; end var;");
  CHECK(error_code(bad) == "E-nonconst-bound");
}

TEST_CASE("validation of the composed trading program is clean") {
  const std::string src = tt_test::read_text(tt_test::corpus_path("trading.tt"));
  CHECK_NOTHROW(tt_test::compile(src));
}

TEST_CASE("a channel written in two arms violates the single-writer rule") {
  const char* src = R"(module toplevel:
  channel c : int delay 1;
  run W(c/o) <> run W(c/o) <> run R(c/i)
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
  CHECK(error_code(src) == "E-multi-writer");
}

TEST_CASE("a variable referenced in two arms is shared state") {
  const char* src = R"(module toplevel:
  var v : int = 0 in
    { task(period=1, duration=1): v = v + 1; end task; }
    <>
    { task(period=1, duration=1): v = v + 2; end task; }
  end var;
end module;
)";
  CHECK(error_code(src) == "E-shared-var");
}

TEST_CASE("pretty printing round-trips every corpus program") {
  const std::vector<std::string> files = {"trading.tt",
                                          "cruise.tt",
                                          "sensor.tt",
                                          "observers/no_missed_orders.tt",
                                          "observers/overtrade.tt",
                                          "observers/negative_speed.tt",
                                          "observers/overshoot.tt",
                                          "observers/liveness.tt"};
  for (const auto& f : files) {
    CAPTURE(f);
    const SurfaceProgram a = parse_program(tt_test::read_text(tt_test::corpus_path(f)));
    const SurfaceProgram b = parse_program(pretty_print(a));
    CHECK(same_ast(a, b));
    CHECK(ast_to_json(a, false) == ast_to_json(b, false));
  }
}

TEST_CASE("ast json carries a format header") {
  const auto j = ast_to_json(parse_program(kTrader));
  CHECK(j.at("format") == "timetide-ast");
  CHECK(j.at("version") == kAstFormatVersion);
}

struct Sentence {
  std::string row;
  std::string accepted;
  std::string near_miss;
  std::string code;  // expected diagnostic for the near miss
};

TEST_CASE("every statement form has an accepted sentence and a rejected near miss") {
  const std::string task_open = "  task(period=2, duration=1):\n";
  const std::string task_close = "\n  end task;";
  auto in_task = [&](const std::string& decls, const std::string& s) { return in_module(decls, task_open + s + task_close); };
  const std::vector<Sentence> rows = {
      {"module", in_module("", "  nothing"), "module toplevel:\n  nothing\n", "E-syntax"},
      {"input const", in_module("  input const K : int;\n", task_open + "send c(K);" + task_close, ", 2/K"),
       in_module("  input const K : float;\n", task_open + "send c(1);" + task_close, ", 2.5/K"), "E-type"},
      {"output", in_module("", "  nothing"), in_module("  output : int;\n", "  nothing"), "E-syntax"},
      {"channel", in_module("", "  chan e : int delay 2 in nothing end chan;"),
       in_module("", "  chan e : int delay in nothing end chan;"), "E-syntax"},
      {"<>", in_module("", "  { nothing } <> { nothing }"), in_module("", "  { nothing } <> "), "E-syntax"},
      {"run", in_module("", "  nothing"),
       "module toplevel:\n  run Missing()\nend module;\n", "E-unknown-module"},
      {"foreach", in_task("", "foreach i in 2 { send c(i); }"), in_task("", "foreach i 2 { send c(i); }"),
       "E-syntax"},
      {"pareach", in_module("", "  pareach i in 2 { nothing }"), in_module("", "  pareach i in { nothing }"),
       "E-syntax"},
      {"var", in_task("", "var v : int = 1 in send c(v); end var;"), in_task("", "var v : int = 1 send c(v); end var;"),
       "E-syntax"},
      {"const", in_task("  const K : int = 4;\n", "send c(K);"), in_task("  const K : int;\n", "send c(K);"),
       "E-syntax"},
      {"sequence", in_task("", "send c(1); send c(2);"), in_task("", "send c(1) send c(2);"), "E-syntax"},
      {"task", in_module("", "  task(period=4, duration=2, offset=1): send c(1); end task;"),
       in_module("", "  task(period=0, duration=1): send c(1); end task;"), "E-task-param"},
      {"abort", in_module("", "  abort task(period=1, duration=1): send c(d); end task; when d > 3"),
       in_module("", "  abort task(period=1, duration=1): send c(d); end task; when"), "E-syntax"},
      {"weak abort", in_module("", "  weak abort task(period=1, duration=1): send c(d); end task; when immediate d > 3"),
       in_module("", "  weak task(period=1, duration=1): send c(d); end task; when d > 3"), "E-syntax"},
      {"assign", in_task("", "var v : int = 0 in v = abs(d); send c(v); end var;"),
       in_task("", "var v : int = 0 in v = ; send c(v); end var;"), "E-syntax"},
      {"assign :=", in_task("", "var v : int = 0 in v := d; send c(v); end var;"),
       in_task("", "var v : int = 0 in v :=: d; send c(v); end var;"), "E-syntax"},
      {"if/else", in_task("", "if (d > 0) { send c(1); } else { send c(2); }"),
       in_task("", "if (d > 0) { send c(1); } else"), "E-syntax"},
      {"expression", in_task("", "abs(d); send c(1);"), in_task("", "launch(d); send c(1);"), "E-unknown-fn"},
      {"send", in_task("", "send c(d + 1);"), in_task("", "send c d;"), "E-syntax"},
      {"fresh", in_task("", "if (fresh(d)) { send c(d); }"), in_task("", "if (fresh()) { send c(d); }"), "E-syntax"},
      {"arithmetic", in_task("", "send c(((d + 1) * 3 - 4) / 2);"), in_task("", "send c(d + * 2);"), "E-syntax"},
      {"comparison", in_task("", "if (d > 1 and d < 9 and d <= 8 and d >= 2 and !(d == 5)) { send c(1); }"),
       in_task("", "if (d > < 1) { send c(1); }"), "E-syntax"},
      {"boolean", in_task("", "if (d > 1 or d < 0) { send c(1); }"), in_task("", "if (d > 1 or) { send c(1); }"),
       "E-syntax"},
      {"identifier", in_task("", "send c(d);"), in_task("", "send c(nowhere);"), "E-unknown-name"},
  };
  for (const auto& r : rows) {
    CAPTURE(r.row);
    CHECK(error_code(r.accepted) == "");
    CHECK(error_code(r.near_miss) == r.code);
  }
}
