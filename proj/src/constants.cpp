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

#include "timetide/constants.hpp"

#include <set>

#include "timetide/parser.hpp"

namespace timetide {

namespace {

bool is_natural_literal(const Expr& e) {
  return e.kind == ExprKind::kLiteral && e.literal.is_int() && e.literal.as_int() >= 0;
}

class ModuleResolver {
 public:
  ModuleResolver(ModuleDecl& m, bool is_entry, const ConstArgs& args) : m_(m), is_entry_(is_entry), args_(args) {}

  void run() {
    for (const auto& p : m_.ports) {
      if (!p.is_const) continue;
      static const std::set<std::string> kConstTypes = {"int", "integer", "bool", "boolean"};
      if (!kConstTypes.count(p.type.name) || p.type.array_size)
        throw CompileError("E-type", "input const '" + p.name + "' must be an integer or boolean, not " + p.type.name,
                           p.span);
      if (!is_entry_) {
        deferred_.insert(p.name);
        continue;
      }
      auto it = args_.find(p.name);
      if (it != args_.end()) {
        env_[p.name] = Expr::lit(it->second, p.span);
      } else if (p.initial) {
        env_[p.name] = literal_of(*p.initial, p.name, p.span);
      } else {
        throw CompileError("E-unresolved-const",
                           "entry input const '" + p.name + "' has no value; pass --const " + p.name + "=<value>",
                           p.span);
      }
    }
    for (auto& c : m_.consts) {
      auto it = args_.find(c.name);
      c.value = it != args_.end() ? Expr::lit(it->second, c.span) : literal_of(c.value, c.name, c.span);
      env_[c.name] = c.value;
    }
    for (auto& p : m_.ports) {
      if (p.type.array_size) resolve_size(*p.type.array_size, p.span);
      if (p.initial) apply(*p.initial);
    }
    for (auto& c : m_.channels) resolve_channel(c);
    substitute_idents(m_.body, env_);
    fold_stmt(m_.body);
    check(m_.body);
  }

 private:
  ModuleDecl& m_;
  bool is_entry_;
  const ConstArgs& args_;
  std::map<std::string, Expr> env_;
  std::set<std::string> deferred_;

  void apply(Expr& e) {
    substitute_idents(e, env_);
    fold_expr(e);
  }

  Expr literal_of(Expr e, const std::string& name, const SourceSpan& span) {
    apply(e);
    if (e.kind != ExprKind::kLiteral)
      throw CompileError("E-unresolved-const",
                         "constant '" + name + "' is not compile-time evaluable: " + pretty_print(e), span);
    return e;
  }

  bool deferred(const Expr& e) const { return e.kind == ExprKind::kIdent && deferred_.count(e.name); }

  void resolve_size(Expr& e, const SourceSpan& span) {
    apply(e);
    if (!is_natural_literal(e) && !deferred(e))
      throw CompileError("E-unresolved-const", "array size must be a compile-time natural: " + pretty_print(e),
                         span);
  }

  void resolve_channel(ChannelDecl& c) {
    if (c.type.array_size) resolve_size(*c.type.array_size, c.span);
    apply(c.delay);
    if (!is_natural_literal(c.delay) && !deferred(c.delay))
      throw CompileError("E-delay", "channel delay must be a compile-time natural: " + pretty_print(c.delay),
                         c.span);
    if (c.initial) apply(*c.initial);
  }

  void check(Stmt& s) {
    switch (s.kind) {
      case StmtKind::kForeach:
      case StmtKind::kPareach:
        if (!is_natural_literal(s.exprs[0]) && !deferred(s.exprs[0]))
          throw CompileError("E-nonconst-bound",
                             "Only a compile-time constant is allowed as the iterator bound (got " +
                                 pretty_print(s.exprs[0]) + ")",
                             s.exprs[0].span);
        break;
      case StmtKind::kChanBlock:
        for (auto& c : s.channels) resolve_channel(c);
        break;
      case StmtKind::kTask:
        for (auto& [key, value] : s.task_args) {
          if (key != "period" && key != "duration" && key != "offset")
            throw CompileError("E-task-param", "unknown task parameter '" + key + "'", value.span);
          if (value.kind != ExprKind::kLiteral && !deferred(value))
            throw CompileError("E-task-param",
                               "task parameter '" + key + "' must be a compile-time constant", value.span);
        }
        break;
      default:
        break;
    }
    if (s.type.array_size) resolve_size(*s.type.array_size, s.span);
    for (auto& c : s.children) check(c);
  }
};

}  // namespace

SurfaceProgram resolve_constants(const SurfaceProgram& program, const ConstArgs& entry_args) {
  SurfaceProgram out = program;
  for (auto& m : out.modules) ModuleResolver(m, m.name == out.entry, entry_args).run();
  return out;
}

ConstArgs parse_const_args(const std::vector<std::string>& pairs) {
  ConstArgs out;
  for (const auto& kv : pairs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw CompileError("E-const-arg", "expected NAME=value, got '" + kv + "'");
    const std::string name = kv.substr(0, eq);
    const std::string text = kv.substr(eq + 1);
    if (text == "true" || text == "false") {
      out[name] = Value(text == "true");
      continue;
    }
    try {
      std::size_t used = 0;
      if (text.find_first_of(".eE") == std::string::npos) {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) {
          out[name] = Value(static_cast<std::int64_t>(v));
          continue;
        }
      } else {
        const double v = std::stod(text, &used);
        if (used == text.size()) {
          out[name] = Value(v);
          continue;
        }
      }
    } catch (const std::exception&) {
    }
    throw CompileError("E-const-arg", "cannot parse value of '" + name + "': '" + text + "'");
  }
  return out;
}

}  // namespace timetide
