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
#include "timetide/ops.hpp"

namespace timetide {

namespace {

template <typename S, typename F>
void visit_top_exprs(S& s, F&& fn) {
  for (auto& e : s.exprs) fn(e);
  for (auto& b : s.bindings) fn(b.actual);
  for (auto& c : s.channels) {
    if (c.type.array_size) fn(*c.type.array_size);
    fn(c.delay);
    if (c.initial) fn(*c.initial);
  }
  for (auto& a : s.task_args) fn(a.second);
  if (s.type.array_size) fn(*s.type.array_size);
}

}  // namespace

void substitute_idents(Expr& e, const std::map<std::string, Expr>& env) {
  if (e.kind == ExprKind::kIdent) {
    auto it = env.find(e.name);
    if (it != env.end()) {
      const SourceSpan span = e.span;
      e = it->second;
      e.span = span;
    }
    return;
  }
  for (auto& a : e.args) substitute_idents(a, env);
}

void substitute_idents(Stmt& s, const std::map<std::string, Expr>& env) {
  if (env.empty()) return;
  const bool binds = s.kind == StmtKind::kVar || s.kind == StmtKind::kForeach || s.kind == StmtKind::kPareach;
  visit_top_exprs(s, [&](Expr& e) { substitute_idents(e, env); });
  if (binds && env.count(s.name)) {
    auto inner = env;
    inner.erase(s.name);
    for (auto& c : s.children) substitute_idents(c, inner);
    return;
  }
  for (auto& c : s.children) substitute_idents(c, env);
}

void fold_expr(Expr& e) {
  for (auto& a : e.args) fold_expr(a);
  auto literal = [](const Expr& x) { return x.kind == ExprKind::kLiteral; };
  try {
    if (e.kind == ExprKind::kUnary && literal(e.args[0])) {
      e = Expr::lit(apply_unary(e.name, e.args[0].literal), e.span);
    } else if (e.kind == ExprKind::kBinary && literal(e.args[0]) && literal(e.args[1])) {
      e = Expr::lit(apply_binary(e.name, e.args[0].literal, e.args[1].literal), e.span);
    }
  } catch (const ValueError&) {
    // left for the interpreter to report at run time
  }
  if (e.kind == ExprKind::kIndex && literal(e.args[1]) && e.args[1].literal.is_int()) {
    const std::int64_t k = e.args[1].literal.as_int();
    const Expr& base = e.args[0];
    if (base.kind == ExprKind::kChanRef && base.channel_array) {
      if (k < 0 || k >= static_cast<std::int64_t>(base.channels.size()))
        throw CompileError("E-index",
                           "index " + std::to_string(k) + " out of range for channel array of size " +
                               std::to_string(base.channels.size()),
                           e.span);
      e = Expr::chan(base.channels[static_cast<std::size_t>(k)], e.span);
    } else if (literal(base) && base.literal.is_array()) {
      const auto& arr = base.literal.as_array();
      if (k < 0 || k >= static_cast<std::int64_t>(arr.size()))
        throw CompileError("E-index", "index out of range", e.span);
      e = Expr::lit(arr[static_cast<std::size_t>(k)], e.span);
    }
  }
}

void fold_stmt(Stmt& s) {
  visit_top_exprs(s, [](Expr& e) { fold_expr(e); });
  for (auto& c : s.children) fold_stmt(c);
}

void for_each_expr(Stmt& s, const std::function<void(Expr&)>& fn) {
  visit_top_exprs(s, fn);
  for (auto& c : s.children) for_each_expr(c, fn);
}

void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& fn) {
  visit_top_exprs(s, fn);
  for (const auto& c : s.children) for_each_expr(c, fn);
}

}  // namespace timetide
