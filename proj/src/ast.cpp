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

#include "timetide/ast.hpp"

#include "timetide/ast_json.hpp"

namespace timetide {

Expr Expr::lit(Value v, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kLiteral;
  e.literal = std::move(v);
  e.span = s;
  return e;
}

Expr Expr::ident(std::string n, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kIdent;
  e.name = std::move(n);
  e.span = s;
  return e;
}

Expr Expr::chan(std::string id, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kChanRef;
  e.channels = {std::move(id)};
  e.span = s;
  return e;
}

Expr Expr::chan_array(std::vector<std::string> ids, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kChanRef;
  e.channels = std::move(ids);
  e.channel_array = true;
  e.span = s;
  return e;
}

Expr Expr::unary(std::string op, Expr a, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kUnary;
  e.name = std::move(op);
  e.args.push_back(std::move(a));
  e.span = s;
  return e;
}

Expr Expr::binary(std::string op, Expr a, Expr b, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kBinary;
  e.name = std::move(op);
  e.args.push_back(std::move(a));
  e.args.push_back(std::move(b));
  e.span = s;
  return e;
}

Expr Expr::call(std::string f, std::vector<Expr> args, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kCall;
  e.name = std::move(f);
  e.args = std::move(args);
  e.span = s;
  return e;
}

Expr Expr::fresh(Expr ch, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kFresh;
  e.args.push_back(std::move(ch));
  e.span = s;
  return e;
}

Expr Expr::index(Expr base, Expr idx, SourceSpan s) {
  Expr e;
  e.kind = ExprKind::kIndex;
  e.args.push_back(std::move(base));
  e.args.push_back(std::move(idx));
  e.span = s;
  return e;
}

Stmt Stmt::nothing(SourceSpan s) {
  Stmt st;
  st.span = s;
  return st;
}

Stmt Stmt::block(std::vector<Stmt> items, SourceSpan s) {
  Stmt st;
  st.kind = StmtKind::kBlock;
  st.children = std::move(items);
  st.span = s;
  return st;
}

Stmt Stmt::par(Stmt left, Stmt right, SourceSpan s) {
  Stmt st;
  st.kind = StmtKind::kPar;
  st.children.push_back(std::move(left));
  st.children.push_back(std::move(right));
  st.span = s;
  return st;
}

const PortDecl* ModuleDecl::find_port(const std::string& n) const {
  for (const auto& p : ports)
    if (p.name == n) return &p;
  return nullptr;
}

const ModuleDecl* SurfaceProgram::find_module(const std::string& n) const {
  for (const auto& m : modules)
    if (m.name == n) return &m;
  return nullptr;
}

ModuleDecl* SurfaceProgram::find_module(const std::string& n) {
  for (auto& m : modules)
    if (m.name == n) return &m;
  return nullptr;
}

const ModuleDecl& SurfaceProgram::entry_module() const {
  const ModuleDecl* m = find_module(entry);
  if (!m) throw CompileError("E-entry", "entry module '" + entry + "' not found");
  return *m;
}

TaskParams task_params(const Stmt& task) {
  TaskParams p;
  bool have_period = false;
  bool have_duration = false;
  for (const auto& [key, e] : task.task_args) {
    if (e.kind != ExprKind::kLiteral || !e.literal.is_int())
      throw CompileError("E-task-param", "task parameter '" + key + "' is not a compile-time integer", e.span);
    const std::int64_t v = e.literal.as_int();
    if (key == "period") {
      p.period = v;
      have_period = true;
    } else if (key == "duration") {
      p.duration = v;
      have_duration = true;
    } else if (key == "offset") {
      p.offset = v;
    } else {
      throw CompileError("E-task-param", "unknown task parameter '" + key + "'", e.span);
    }
  }
  if (!have_period || !have_duration)
    throw CompileError("E-task-param", "task needs both period and duration", task.span);
  if (p.period < 1 || p.duration < 1 || p.offset < 0)
    throw CompileError("E-task-param", "task requires period >= 1, duration >= 1, offset >= 0", task.span);
  return p;
}

bool same_ast(const SurfaceProgram& a, const SurfaceProgram& b) {
  return ast_to_json(a, false) == ast_to_json(b, false);
}

}  // namespace timetide
