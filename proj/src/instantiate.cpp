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

#include <set>

#include "timetide/desugar.hpp"
#include "timetide/ops.hpp"
#include "timetide/parser.hpp"

namespace timetide {

namespace {

bool literal_natural(const Expr& e) {
  return e.kind == ExprKind::kLiteral && e.literal.is_int() && e.literal.as_int() >= 0;
}

struct Ctx {
  const SurfaceProgram& program;
  std::vector<ChannelDecl> channels;
  std::map<std::string, std::size_t> index;
  std::vector<std::string> stack;

  ChannelDecl& channel(const std::string& id) { return channels[index.at(id)]; }
};

std::string unique_id(const Ctx& ctx, const std::string& base) {
  auto taken = [&](const std::string& id) {
    return ctx.index.count(id) || ctx.index.count(id + ".0");
  };
  if (!taken(base)) return base;
  for (int k = 2;; ++k) {
    const std::string id = base + "#" + std::to_string(k);
    if (!taken(id)) return id;
  }
}

Expr declare_channel(Ctx& ctx, const std::string& prefix, const ChannelDecl& d) {
  if (!literal_natural(d.delay))
    throw CompileError("E-delay", "channel '" + d.name + "' needs a literal natural delay, got " + pretty_print(d.delay),
                       d.span);
  const std::string id = unique_id(ctx, prefix + d.name);
  auto add = [&](const std::string& cid) {
    ChannelDecl e = d;
    e.name = cid;
    e.type.array_size.reset();
    ctx.index[cid] = ctx.channels.size();
    ctx.channels.push_back(std::move(e));
  };
  if (!d.type.array_size) {
    add(id);
    return Expr::chan(id, d.span);
  }
  const Expr& size = *d.type.array_size;
  if (!literal_natural(size))
    throw CompileError("E-unresolved-const", "channel array '" + d.name + "' needs a literal size", d.span);
  std::vector<std::string> ids;
  for (std::int64_t k = 0; k < size.literal.as_int(); ++k) {
    ids.push_back(id + "." + std::to_string(k));
    add(ids.back());
  }
  return Expr::chan_array(std::move(ids), d.span);
}

void count_runs(const Stmt& s, std::map<std::string, int>& counts) {
  if (s.kind == StmtKind::kRun) ++counts[s.name];
  for (const auto& c : s.children) count_runs(c, counts);
}

void rebind_chan_block(Stmt& s, Ctx& ctx, const std::string& prefix);

Stmt inline_module(Ctx& ctx, const ModuleDecl& m, const std::string& path, const std::map<std::string, Expr>& actuals);

void expand(Stmt& s, Ctx& ctx, const std::string& path, std::map<std::string, int>& seen,
            const std::map<std::string, int>& counts) {
  const std::string prefix = path.empty() ? "" : path + "/";
  if (s.kind == StmtKind::kChanBlock) rebind_chan_block(s, ctx, prefix);
  if (s.kind != StmtKind::kRun) {
    for (auto& c : s.children) expand(c, ctx, path, seen, counts);
    return;
  }
  const ModuleDecl* target = ctx.program.find_module(s.name);
  if (!target) throw CompileError("E-unknown-module", "run of undeclared module '" + s.name + "'", s.span);
  for (const auto& name : ctx.stack) {
    if (name == target->name) {
      std::string cycle;
      for (const auto& n : ctx.stack) cycle += n + " -> ";
      throw CompileError("E-cycle", "cyclic instantiation " + cycle + target->name, s.span);
    }
  }
  std::map<std::string, Expr> actuals;
  std::size_t positional = 0;
  for (const auto& b : s.bindings) {
    const PortDecl* port = nullptr;
    if (b.port.empty()) {
      if (positional >= target->ports.size())
        throw CompileError("E-arity",
                           "too many bindings for module '" + target->name + "' (" +
                               std::to_string(target->ports.size()) + " ports)",
                           b.span);
      port = &target->ports[positional++];
    } else {
      port = target->find_port(b.port);
      if (!port)
        throw CompileError("E-unknown-port", "module '" + target->name + "' has no port '" + b.port + "'", b.span);
    }
    if (actuals.count(port->name))
      throw CompileError("E-dup-binding", "port '" + port->name + "' bound twice", b.span);
    const Expr& a = b.actual;
    if (a.kind != ExprKind::kChanRef && a.kind != ExprKind::kLiteral)
      throw CompileError("E-binding",
                         "port '" + port->name + "' must be bound to a channel or a compile-time constant, got " +
                             pretty_print(a),
                         b.span);
    if (a.kind == ExprKind::kLiteral && port->direction == PortDirection::kOutput)
      throw CompileError("E-binding", "output port '" + port->name + "' cannot be bound to a constant", b.span);
    if (a.kind == ExprKind::kChanRef && port->is_const)
      throw CompileError("E-binding", "input const port '" + port->name + "' needs a compile-time constant", b.span);
    actuals[port->name] = a;
  }
  for (const auto& p : target->ports)
    if (!actuals.count(p.name))
      throw CompileError("E-unbound-port", "port '" + p.name + "' of module '" + target->name + "' is not bound",
                         s.span);
  std::string inst = target->name;
  if (counts.at(target->name) > 1) inst += "[" + std::to_string(seen[target->name]++) + "]";
  const std::string child_path = prefix + inst;
  Stmt body = inline_module(ctx, *target, child_path, actuals);
  Stmt wrapped;
  wrapped.kind = StmtKind::kInstance;
  wrapped.name = child_path;
  wrapped.span = s.span;
  wrapped.children.push_back(std::move(body));
  s = std::move(wrapped);
}

void rebind_chan_block(Stmt& s, Ctx& ctx, const std::string& prefix) {
  std::map<std::string, Expr> local;
  for (auto& c : s.channels) {
    fold_expr(c.delay);
    if (c.type.array_size) fold_expr(*c.type.array_size);
    const std::string local_name = c.name;
    Expr ref = declare_channel(ctx, prefix, c);
    if (ref.channels.empty()) {
      c.name = prefix + local_name;
    } else if (ref.channel_array) {
      const std::string& first = ref.channels.front();
      c.name = first.substr(0, first.rfind('.'));
    } else {
      c.name = ref.channels.front();
    }
    local[local_name] = std::move(ref);
  }
  substitute_idents(s.children[0], local);
  fold_stmt(s.children[0]);
  s.children[0] = unroll_iterators(s.children[0]);
}

void check_port_type(Ctx& ctx, const PortDecl& p, const Expr& actual, const std::map<std::string, Expr>& consts) {
  if (actual.kind != ExprKind::kChanRef) return;
  const bool port_array = p.type.array_size.has_value();
  if (port_array != actual.channel_array)
    throw CompileError("E-type",
                       "port '" + p.name + "' is " + (port_array ? "an array" : "a scalar") + " but bound to " +
                           (actual.channel_array ? "a channel array" : "a single channel"),
                       actual.span);
  if (port_array) {
    Expr size = *p.type.array_size;
    substitute_idents(size, consts);
    fold_expr(size);
    if (literal_natural(size) && static_cast<std::size_t>(size.literal.as_int()) != actual.channels.size())
      throw CompileError("E-type",
                         "port '" + p.name + "' expects " + std::to_string(size.literal.as_int()) +
                             " channels, bound to " + std::to_string(actual.channels.size()),
                         actual.span);
  }
  for (const auto& id : actual.channels) {
    const auto& ch = ctx.channel(id);
    if (!ch.type.name.empty() && !p.type.name.empty() &&
        canonical_type(ch.type.name) != canonical_type(p.type.name))
      throw CompileError("E-type",
                         "port '" + p.name + "' has type " + p.type.name + " but channel '" + id + "' carries " +
                             ch.type.name,
                         actual.span);
  }
}

Stmt inline_module(Ctx& ctx, const ModuleDecl& m, const std::string& path, const std::map<std::string, Expr>& actuals) {
  ctx.stack.push_back(m.name);
  const std::string prefix = path.empty() ? "" : path + "/";
  std::map<std::string, Expr> consts;
  for (const auto& p : m.ports)
    if (p.is_const && actuals.count(p.name)) consts[p.name] = actuals.at(p.name);

  std::map<std::string, Expr> env;
  for (const auto& p : m.ports) {
    if (p.is_const) continue;
    const Expr& a = actuals.at(p.name);
    check_port_type(ctx, p, a, consts);
    if (p.initial && p.direction == PortDirection::kOutput && a.kind == ExprKind::kChanRef) {
      Expr init = *p.initial;
      fold_expr(init);
      for (const auto& id : a.channels) {
        auto& ch = ctx.channel(id);
        if (!ch.initial) ch.initial = init;
      }
    }
    env[p.name] = a;
  }
  for (auto d : m.channels) {
    substitute_idents(d.delay, consts);
    fold_expr(d.delay);
    if (d.type.array_size) {
      substitute_idents(*d.type.array_size, consts);
      fold_expr(*d.type.array_size);
    }
    env[d.name] = declare_channel(ctx, prefix, d);
  }
  Stmt body = m.body;
  substitute_idents(body, consts);
  fold_stmt(body);
  body = unroll_iterators(body);
  substitute_idents(body, env);
  fold_stmt(body);

  std::map<std::string, int> counts;
  count_runs(body, counts);
  std::map<std::string, int> seen;
  expand(body, ctx, path, seen, counts);
  ctx.stack.pop_back();
  return body;
}

}  // namespace

Stmt unroll_iterators(const Stmt& s) {
  if ((s.kind == StmtKind::kForeach || s.kind == StmtKind::kPareach) && literal_natural(s.exprs[0])) {
    const std::int64_t n = s.exprs[0].literal.as_int();
    std::vector<Stmt> items;
    for (std::int64_t k = 0; k < n; ++k) {
      Stmt body = s.children[0];
      substitute_idents(body, {{s.name, Expr::lit(Value(k), s.exprs[0].span)}});
      fold_stmt(body);
      items.push_back(unroll_iterators(body));
    }
    if (items.empty()) return Stmt::nothing(s.span);
    if (items.size() == 1) return std::move(items.front());
    if (s.kind == StmtKind::kForeach) return Stmt::block(std::move(items), s.span);
    Stmt acc = std::move(items.back());
    for (std::size_t i = items.size() - 1; i-- > 0;) acc = Stmt::par(std::move(items[i]), std::move(acc), s.span);
    return acc;
  }
  Stmt out = s;
  for (auto& c : out.children) c = unroll_iterators(c);
  return out;
}

SurfaceProgram unroll_iterators(const SurfaceProgram& program) {
  SurfaceProgram out = program;
  for (auto& m : out.modules) m.body = unroll_iterators(m.body);
  return out;
}

SurfaceProgram instantiate_modules(const SurfaceProgram& program) {
  Ctx ctx{program, {}, {}, {}};
  const ModuleDecl& entry = program.entry_module();
  std::map<std::string, Expr> actuals;
  for (const auto& p : entry.ports) {
    if (p.is_const) continue;
    ChannelDecl d;
    d.name = p.name;
    d.type = p.type;
    d.delay = Expr::lit(Value(0), p.span);
    d.initial = p.direction == PortDirection::kOutput ? p.initial : std::nullopt;
    d.span = p.span;
    d.sink = p.direction == PortDirection::kOutput;
    actuals[p.name] = declare_channel(ctx, "", d);
  }
  ModuleDecl flat;
  flat.name = entry.name;
  flat.span = entry.span;
  flat.ports = entry.ports;
  flat.body = inline_module(ctx, entry, "", actuals);
  flat.channels = std::move(ctx.channels);

  SurfaceProgram out;
  out.entry = entry.name;
  for (const auto& m : program.modules) out.modules.push_back(m.name == entry.name ? flat : m);
  return out;
}

// ---- thread extraction ---------------------------------------------------

namespace {

bool has_structural_par(const Stmt& s) {
  switch (s.kind) {
    case StmtKind::kPar:
      return true;
    case StmtKind::kInstance:
    case StmtKind::kChanBlock:
    case StmtKind::kVar:
      return has_structural_par(s.children[0]);
    case StmtKind::kBlock:
      for (const auto& c : s.children)
        if (has_structural_par(c)) return true;
      return false;
    default:
      return false;
  }
}

bool contains_par(const Stmt& s) {
  if (s.kind == StmtKind::kPar) return true;
  for (const auto& c : s.children)
    if (contains_par(c)) return true;
  return false;
}

void collect_names(const Stmt& s, std::set<std::string>& used, std::set<std::string>& declared) {
  if (s.kind == StmtKind::kAssign) used.insert(s.name);
  if (s.kind == StmtKind::kVar) declared.insert(s.name);
  std::function<void(const Expr&)> visit = [&](const Expr& e) {
    if (e.kind == ExprKind::kIdent) used.insert(e.name);
    for (const auto& a : e.args) visit(a);
  };
  for (const auto& e : s.exprs) visit(e);
  for (const auto& c : s.children) collect_names(c, used, declared);
}

struct Extractor {
  std::vector<Diagnostic>& diags;
  std::vector<std::pair<std::string, Stmt>> leaves;
  std::map<const Stmt*, std::vector<std::size_t>> var_users;

  void walk(const Stmt& s, const std::string& path, std::vector<const Stmt*> wrappers) {
    switch (s.kind) {
      case StmtKind::kPar:
        walk(s.children[0], path, wrappers);
        walk(s.children[1], path, wrappers);
        return;
      case StmtKind::kInstance:
        walk(s.children[0], s.name, wrappers);
        return;
      case StmtKind::kChanBlock:
        if (has_structural_par(s.children[0])) {
          walk(s.children[0], path, wrappers);
          return;
        }
        break;
      case StmtKind::kVar:
        if (has_structural_par(s.children[0])) {
          wrappers.push_back(&s);
          walk(s.children[0], path, wrappers);
          return;
        }
        break;
      case StmtKind::kBlock:
        if (has_structural_par(s)) {
          std::vector<const Stmt*> live;
          for (const auto& c : s.children)
            if (c.kind != StmtKind::kNothing) live.push_back(&c);
          if (live.size() == 1) {
            walk(*live.front(), path, wrappers);
          } else {
            diags.push_back({Severity::kError, "E-par-position",
                             "`<>` composes threads only at module level; it cannot appear inside a sequence",
                             s.span});
          }
          return;
        }
        break;
      default:
        break;
    }
    leaf(s, path, wrappers);
  }

  void leaf(const Stmt& s, const std::string& path, const std::vector<const Stmt*>& wrappers) {
    if (contains_par(s)) {
      diags.push_back({Severity::kError, "E-par-position",
                       "`<>` composes threads only at module level; it cannot appear inside a statement", s.span});
      return;
    }
    std::set<std::string> used;
    std::set<std::string> declared;
    collect_names(s, used, declared);
    Stmt body = s;
    for (auto it = wrappers.rbegin(); it != wrappers.rend(); ++it) {
      const Stmt* w = *it;
      if (!used.count(w->name) || declared.count(w->name)) continue;
      var_users[w].push_back(leaves.size());
      Stmt v = *w;
      v.children[0] = std::move(body);
      body = std::move(v);
      std::set<std::string> init_used;
      std::set<std::string> ignore;
      Stmt init;
      init.kind = StmtKind::kExpr;
      init.exprs = w->exprs;
      collect_names(init, init_used, ignore);
      used.insert(init_used.begin(), init_used.end());
    }
    leaves.emplace_back(path, std::move(body));
  }
};

}  // namespace

std::vector<ThreadLeaf> extract_threads(const SurfaceProgram& instantiated, std::vector<Diagnostic>& diags) {
  const ModuleDecl& entry = instantiated.entry_module();
  Extractor ex{diags, {}, {}};
  ex.walk(entry.body, "", {});
  for (const auto& [var, users] : ex.var_users) {
    if (users.size() > 1)
      diags.push_back({Severity::kError, "E-shared-var",
                       "variable '" + var->name + "' is shared between " + std::to_string(users.size()) +
                           " parallel threads",
                       var->span});
  }
  std::map<std::string, int> per_path;
  for (const auto& [path, body] : ex.leaves) ++per_path[path];
  std::map<std::string, int> seen;
  std::vector<ThreadLeaf> out;
  for (auto& [path, body] : ex.leaves) {
    const std::string base = path.empty() ? entry.name : path;
    std::string id = base;
    if (per_path[path] > 1) id += "#" + std::to_string(seen[path]++);
    out.push_back({id, std::move(body)});
  }
  return out;
}

}  // namespace timetide
