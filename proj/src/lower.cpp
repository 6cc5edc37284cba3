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

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "timetide/desugar.hpp"
#include "timetide/parser.hpp"

namespace timetide {

std::int64_t lcm64(std::int64_t a, std::int64_t b) { return std::lcm(a, b); }

namespace {

KTerm with_items(const KTerm& t, std::vector<KTerm> items) {
  if (t->kind == KKind::kSeq) return k::seq(std::move(items));
  auto n = std::make_shared<KNode>(*t);
  n->items = std::move(items);
  n->hashed = false;
  return n;
}

bool has_expr(KKind kind) {
  return kind == KKind::kAssign || kind == KKind::kExpr || kind == KKind::kSend || kind == KKind::kIf ||
         kind == KKind::kAbort || kind == KKind::kCheckAbort;
}

// Applies `fn` to every read position. Send targets keep their channel but
// their index expression is mapped.
KTerm map_exprs(const KTerm& t, const std::function<Expr(const Expr&)>& fn) {
  auto n = std::make_shared<KNode>(*t);
  n->hashed = false;
  if (has_expr(t->kind)) n->expr = fn(t->expr);
  if (t->kind == KKind::kSend && t->target.kind == ExprKind::kIndex) n->target.args[1] = fn(t->target.args[1]);
  for (auto& i : n->items) i = map_exprs(i, fn);
  if (t->kind == KKind::kSeq) return k::seq(n->items);
  return n;
}

void walk_reads(const KTerm& t, const std::function<void(const Expr&)>& fn) {
  if (has_expr(t->kind)) fn(t->expr);
  if (t->kind == KKind::kSend && t->target.kind == ExprKind::kIndex) fn(t->target.args[1]);
  for (const auto& i : t->items) walk_reads(i, fn);
}

void chan_ids(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == ExprKind::kChanRef) {
    for (const auto& id : e.channels)
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    return;
  }
  for (const auto& a : e.args) chan_ids(a, out);
}

std::string latch_name(const std::string& id) { return "latch_" + id; }
std::string latchf_name(const std::string& id) { return "latchf_" + id; }

Expr array_of(const std::vector<std::string>& ids, std::string (*name)(const std::string&), const SourceSpan& span) {
  std::vector<Expr> items;
  for (const auto& id : ids) items.push_back(Expr::ident(name(id), span));
  return Expr::call("__array", std::move(items), span);
}

struct Redirect {
  const std::set<std::string>& inputs;
  std::set<std::string> value_used;
  std::set<std::string> fresh_used;

  bool all_inputs(const Expr& ref) const {
    return std::all_of(ref.channels.begin(), ref.channels.end(), [&](const std::string& id) { return inputs.count(id); });
  }

  Expr fresh_of(const Expr& a, const SourceSpan& span, const Expr& original) {
    if (a.kind == ExprKind::kChanRef && all_inputs(a)) {
      for (const auto& id : a.channels) fresh_used.insert(id);
      if (!a.channel_array) return Expr::ident(latchf_name(a.channels[0]), span);
      return array_of(a.channels, latchf_name, span);
    }
    if (a.kind == ExprKind::kIndex && a.args[0].kind == ExprKind::kChanRef && all_inputs(a.args[0])) {
      for (const auto& id : a.args[0].channels) fresh_used.insert(id);
      return Expr::index(array_of(a.args[0].channels, latchf_name, span), (*this)(a.args[1]), span);
    }
    Expr copy = original;
    for (auto& x : copy.args) x = (*this)(x);
    return copy;
  }

  Expr operator()(const Expr& e) {
    if (e.kind == ExprKind::kFresh) return fresh_of(e.args[0], e.span, e);
    if (e.kind == ExprKind::kChanRef && all_inputs(e)) {
      for (const auto& id : e.channels) value_used.insert(id);
      if (!e.channel_array) return Expr::ident(latch_name(e.channels[0]), e.span);
      return array_of(e.channels, latch_name, e.span);
    }
    Expr copy = e;
    for (auto& a : copy.args) a = (*this)(a);
    return copy;
  }
};

KTerm lower_task_info(const TaskParams& params, const KTerm& body, const std::vector<std::string>& inputs,
                      TaskInfo info) {
  const std::int64_t p = params.period;
  const std::int64_t d = params.duration;
  const std::int64_t o = params.offset;
  if (p < 1 || d < 1 || o < 0) throw CompileError("E-task-param", "task needs period >= 1, duration >= 1, offset >= 0");
  if (d > p) throw CompileError("E-task-param", "duration exceeds period; the task must be pipelined first");
  std::int64_t loop_offset = o % p;
  std::int64_t prefix = o - loop_offset;
  if (loop_offset + d > p) {
    loop_offset = 0;
    prefix = o;
  }
  const std::set<std::string> input_set(inputs.begin(), inputs.end());
  Redirect redirect{input_set, {}, {}};
  KTerm redirected = map_exprs(body, std::ref(redirect));

  std::vector<KTerm> items;
  if (loop_offset > 0) items.push_back(k::sync(loop_offset));
  for (const auto& id : inputs) {
    if (redirect.fresh_used.count(id))
      items.push_back(k::assign(latchf_name(id), Expr::fresh(Expr::chan(id))));
    if (redirect.value_used.count(id) || redirect.fresh_used.count(id))
      items.push_back(k::assign(latch_name(id), Expr::chan(id)));
  }
  items.push_back(k::sync(d));
  items.push_back(redirected);
  if (p - d - loop_offset > 0) items.push_back(k::sync(p - d - loop_offset));
  info.params = params;
  info.prefix = prefix;
  KTerm body_loop = k::loop(k::seq(std::move(items)), info);
  if (prefix == 0) return body_loop;
  return k::seq({k::sync(prefix), std::move(body_loop)});
}

// ---- checkabort insertion ------------------------------------------------

struct Inserter {
  Expr cond;
  std::string label;
  bool weak = false;
  bool immediate = false;
  int syncs_seen = 0;

  KTerm ca() const { return k::checkabort(cond, label); }

  bool weak_wants(bool first) const { return !first || immediate; }

  KTerm strong(const KTerm& t) {
    if (t->kind == KKind::kSync) return k::seq({t, ca()});
    if (t->items.empty()) return t;
    std::vector<KTerm> items;
    for (const auto& i : t->items) items.push_back(strong(i));
    return with_items(t, std::move(items));
  }

  KTerm weak_walk(const KTerm& t) {
    if (t->kind == KKind::kSync) {
      const bool first = syncs_seen++ == 0;
      return weak_wants(first) ? k::seq({ca(), t}) : t;
    }
    if (t->kind == KKind::kSeq) {
      std::vector<KTerm> out;
      for (const auto& i : t->items) {
        if (i->kind == KKind::kSync) {
          const bool first = syncs_seen++ == 0;
          if (weak_wants(first)) {
            auto pos = out.end();
            while (pos != out.begin() && (*(pos - 1))->kind == KKind::kCheckAbort) --pos;
            out.insert(pos, ca());
          }
          out.push_back(i);
          continue;
        }
        KTerm m = weak_walk(i);
        if (m->kind == KKind::kSeq)
          out.insert(out.end(), m->items.begin(), m->items.end());
        else
          out.push_back(m);
      }
      return k::seq(std::move(out));
    }
    if (t->items.empty()) return t;
    std::vector<KTerm> items;
    for (const auto& i : t->items) items.push_back(weak_walk(i));
    return with_items(t, std::move(items));
  }

  KTerm apply(const KTerm& body) {
    if (weak) return weak_walk(body);
    KTerm out = strong(body);
    if (immediate) out = k::seq({ca(), out});
    return out;
  }
};

}  // namespace

KTerm lower_task(const TaskParams& params, const KTerm& body, const std::vector<std::string>& inputs,
                 const std::string& label) {
  TaskInfo info;
  info.label = label;
  return lower_task_info(params, body, inputs, info);
}

std::vector<TaskParams> pipeline_params(const TaskParams& params) {
  if (params.duration <= params.period) return {params};
  const std::int64_t l = lcm64(params.duration, params.period);
  const std::int64_t n = l / params.period;
  std::vector<TaskParams> out;
  for (std::int64_t j = 0; j < n; ++j) out.push_back({l, params.duration, params.offset + j * params.period});
  return out;
}

std::vector<KTerm> pipeline_task(const TaskParams& params, const KTerm& body, const std::vector<std::string>& inputs,
                                 const std::string& label) {
  const auto replicas = pipeline_params(params);
  std::vector<KTerm> out;
  for (std::size_t j = 0; j < replicas.size(); ++j) {
    TaskInfo info;
    info.label = replicas.size() > 1 && !label.empty() ? label + "~r" + std::to_string(j) : label;
    info.replica = static_cast<int>(j);
    info.replicas = static_cast<int>(replicas.size());
    out.push_back(lower_task_info(replicas[j], body, inputs, info));
  }
  return out;
}

KTerm insert_checkaborts(const KTerm& term) {
  std::vector<KTerm> items;
  for (const auto& i : term->items) items.push_back(insert_checkaborts(i));
  KTerm rebuilt = term->items.empty() ? term : with_items(term, std::move(items));
  if (term->kind != KKind::kAbort) return rebuilt;
  Inserter ins{term->expr, term->name, term->weak, term->immediate};
  return with_items(rebuilt, {ins.apply(rebuilt->items[0])});
}

std::vector<std::string> channels_read(const KTerm& t) {
  std::vector<std::string> out;
  walk_reads(t, [&](const Expr& e) { chan_ids(e, out); });
  return out;
}

std::vector<std::string> channels_written(const KTerm& t) {
  std::vector<std::string> out;
  std::function<void(const KTerm&)> walk = [&](const KTerm& n) {
    if (n->kind == KKind::kSend) {
      const Expr& target = n->target.kind == ExprKind::kIndex ? n->target.args[0] : n->target;
      chan_ids(target, out);
    }
    for (const auto& i : n->items) walk(i);
  };
  walk(t);
  return out;
}

// ---- whole-program lowering ----------------------------------------------

namespace {

void collect_tasks(const Stmt& s, std::vector<const Stmt*>& out) {
  if (s.kind == StmtKind::kTask) out.push_back(&s);
  for (const auto& c : s.children) collect_tasks(c, out);
}

void check_task_body(const Stmt& s, std::vector<Diagnostic>& diags) {
  if (s.kind == StmtKind::kTask || s.kind == StmtKind::kPar || s.kind == StmtKind::kRun ||
      s.kind == StmtKind::kInstance) {
    diags.push_back({Severity::kError, "E-task-body", "a task body may not contain task, `<>` or run", s.span});
    return;
  }
  for (const auto& c : s.children) check_task_body(c, diags);
}

class Lowerer {
 public:
  Lowerer(std::string thread, std::size_t replica) : thread_(std::move(thread)), replica_(replica) {}

  KTerm lower(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::kNothing:
        return k::nothing();
      case StmtKind::kBlock: {
        std::vector<KTerm> items;
        for (const auto& c : s.children) items.push_back(lower(c));
        return k::seq(std::move(items));
      }
      case StmtKind::kVar: {
        std::vector<KTerm> items;
        std::optional<Expr> init;
        if (!s.exprs.empty()) init = rename(s.exprs[0]);
        const std::string unique = declare(s.name);
        items.push_back(k::var_decl(unique));
        if (init) items.push_back(k::assign(unique, *init));
        scopes_.push_back({{s.name, unique}});
        items.push_back(lower(s.children[0]));
        scopes_.pop_back();
        return k::seq(std::move(items));
      }
      case StmtKind::kChanBlock:
      case StmtKind::kInstance:
        return lower(s.children[0]);
      case StmtKind::kTask: {
        const TaskParams params = task_params(s);
        const auto replicas = pipeline_params(params);
        const TaskParams& mine = replicas[std::min(replica_, replicas.size() - 1)];
        KTerm body = k::seq({lower(s.children[0]), k::complete(thread_)});
        TaskInfo info;
        info.label = thread_;
        info.replica = static_cast<int>(replica_);
        info.replicas = static_cast<int>(replicas.size());
        try {
          return lower_task_info(mine, body, channels_read(body), info);
        } catch (CompileError& e) {
          throw CompileError(e.diagnostics().front().code, e.diagnostics().front().message, s.span);
        }
      }
      case StmtKind::kAbort: {
        const std::string label = thread_ + ":A" + std::to_string(aborts_++);
        return k::abort(rename(s.exprs[0]), label, lower(s.children[0]), s.weak, s.immediate);
      }
      case StmtKind::kAssign:
        return k::assign(lookup(s.name), rename(s.exprs[0]));
      case StmtKind::kIf:
        return k::if_(rename(s.exprs[0]), lower(s.children[0]),
                      s.children.size() > 1 ? lower(s.children[1]) : k::nothing());
      case StmtKind::kExpr:
        return k::expr(rename(s.exprs[0]));
      case StmtKind::kSend:
        return k::send(rename(s.exprs[0]), rename(s.exprs[1]));
      case StmtKind::kRun:
      case StmtKind::kForeach:
      case StmtKind::kPareach:
      case StmtKind::kPar:
        throw CompileError("E-internal", "statement survived instantiation", s.span);
    }
    return k::nothing();
  }

 private:
  std::string thread_;
  std::size_t replica_;
  std::vector<std::map<std::string, std::string>> scopes_;
  std::set<std::string> declared_;
  int aborts_ = 0;

  std::string declare(const std::string& name) {
    std::string unique = name;
    for (int n = 2; declared_.count(unique); ++n) unique = name + "#" + std::to_string(n);
    declared_.insert(unique);
    return unique;
  }

  std::string lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return name;
  }

  Expr rename(const Expr& e) const {
    if (e.kind == ExprKind::kIdent) {
      Expr copy = e;
      copy.name = lookup(e.name);
      return copy;
    }
    Expr copy = e;
    for (auto& a : copy.args) a = rename(a);
    return copy;
  }
};

std::string original_thread(const std::string& id) {
  const auto pos = id.find("~r");
  return pos == std::string::npos ? id : id.substr(0, pos);
}

void walk_term_exprs(const KTerm& t, const std::function<void(const Expr&)>& fn) {
  if (t->kind == KKind::kAssign || t->kind == KKind::kExpr || t->kind == KKind::kSend || t->kind == KKind::kIf ||
      t->kind == KKind::kAbort || t->kind == KKind::kCheckAbort)
    fn(t->expr);
  if (t->kind == KKind::kSend) fn(t->target);
  for (const auto& i : t->items) walk_term_exprs(i, fn);
}

void walk_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
  fn(e);
  for (const auto& a : e.args) walk_expr(a, fn);
}

void collect_names(const KTerm& t, std::set<std::string>& names) {
  if (t->kind == KKind::kVarDecl || t->kind == KKind::kAssign) names.insert(t->name);
  for (const auto& i : t->items) collect_names(i, names);
}

void check_names(const KThread& th, const HostTable& host, std::vector<Diagnostic>& diags) {
  std::set<std::string> names;
  collect_names(th.body, names);
  std::set<std::string> reported;
  walk_term_exprs(th.body, [&](const Expr& root) {
    walk_expr(root, [&](const Expr& e) {
      if (e.kind == ExprKind::kCall && e.name != "__array" && !host.find(e.name) && reported.insert(e.name).second)
        diags.push_back({Severity::kError, "E-unknown-fn", "unknown function '" + e.name + "'", e.span});
      if (e.kind == ExprKind::kIdent && !names.count(e.name) && reported.insert(e.name).second)
        diags.push_back(
            {Severity::kError, "E-unknown-name", "unknown name '" + e.name + "' in thread " + th.id, e.span});
    });
  });
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

}  // namespace

KernelProgram to_kernel(const SurfaceProgram& resolved, const KernelOptions& options) {
  const SurfaceProgram inst = instantiate_modules(resolved);
  std::vector<Diagnostic> diags;
  const auto leaves = extract_threads(inst, diags);
  if (has_errors(diags)) throw CompileError(diags);

  KernelProgram out;
  for (const auto& c : inst.entry_module().channels) {
    ChannelSpec spec;
    spec.id = c.name;
    spec.delta = c.delay.literal.as_int();
    spec.elem_type = c.type.name;
    if (c.initial) {
      Expr init = *c.initial;
      fold_expr(init);
      if (init.kind != ExprKind::kLiteral)
        throw CompileError("E-unresolved-const", "initial value of '" + c.name + "' is not constant", c.span);
      spec.initial = init.literal;
    }
    spec.sink = c.sink;
    spec.tap_of = c.tap_of;
    out.channels[spec.id] = spec;
  }

  for (const auto& leaf : leaves) {
    std::vector<const Stmt*> tasks;
    collect_tasks(leaf.body, tasks);
    std::size_t replicas = 1;
    for (const Stmt* t : tasks) {
      check_task_body(t->children[0], diags);
      const TaskParams params = task_params(*t);
      if (options.warnings && params.period > 0 && params.offset >= params.period)
        options.warnings->push_back({Severity::kWarning, "W-offset",
                                     "offset " + std::to_string(params.offset) + " is not below period " +
                                         std::to_string(params.period) + "; the excess runs once before the loop",
                                     t->span});
      const std::size_t n = pipeline_params(params).size();
      if (n > 1 && replicas > 1)
        diags.push_back({Severity::kError, "E-task-body", "only one pipelined task per thread is supported", t->span});
      replicas = std::max(replicas, n);
    }
    if (has_errors(diags)) throw CompileError(diags);
    for (std::size_t j = 0; j < replicas; ++j) {
      const std::string id = replicas > 1 ? leaf.id + "~r" + std::to_string(j) : leaf.id;
      KTerm body = insert_checkaborts(Lowerer(id, j).lower(leaf.body));
      std::function<void(const KTerm&)> check_loops = [&](const KTerm& t) {
        if (t->kind == KKind::kLoop && !always_syncs(t->items[0]))
          diags.push_back({Severity::kError, "E-loop-sync", "loop body in thread " + id + " can complete without a sync",
                           {}});
        for (const auto& i : t->items) check_loops(i);
      };
      check_loops(body);
      out.threads.push_back({id, body, {}, {}});
    }
  }
  const HostTable& host = options.host ? *options.host : HostTable::standard();
  for (const auto& t : out.threads) check_names(t, host, diags);
  if (has_errors(diags)) throw CompileError(diags);

  for (auto& t : out.threads) {
    for (const auto& id : channels_read(t.body)) {
      if (!out.channels.count(id)) throw CompileError("E-internal", "unknown channel '" + id + "'");
      add_unique(t.inbound, id);
      add_unique(out.channels[id].readers, t.id);
    }
    for (const auto& id : channels_written(t.body)) {
      if (!out.channels.count(id)) throw CompileError("E-internal", "unknown channel '" + id + "'");
      add_unique(t.outbound, id);
      add_unique(out.channels[id].writers, t.id);
    }
  }
  for (auto& [id, c] : out.channels) {
    if (c.tap_of.empty()) continue;
    auto src = out.channels.find(c.tap_of);
    if (src == out.channels.end()) throw CompileError("E-tap", "tap of unknown channel '" + c.tap_of + "'");
    if (!c.writers.empty())
      diags.push_back({Severity::kError, "E-multi-writer", "tap channel '" + id + "' is written directly", {}});
    c.writers = src->second.writers;
    for (auto& t : out.threads)
      if (std::find(c.writers.begin(), c.writers.end(), t.id) != c.writers.end()) add_unique(t.outbound, id);
  }
  for (auto& t : out.threads) {
    std::sort(t.inbound.begin(), t.inbound.end());
    std::sort(t.outbound.begin(), t.outbound.end());
  }
  for (auto& [id, c] : out.channels) {
    std::set<std::string> writer_roots;
    std::set<std::string> reader_roots;
    for (const auto& w : c.writers) writer_roots.insert(original_thread(w));
    for (const auto& r : c.readers) reader_roots.insert(original_thread(r));
    c.merge_writers = c.writers.size() > 1 && writer_roots.size() == 1;
    if (!options.check_endpoints) continue;
    if (writer_roots.size() > 1)
      diags.push_back({Severity::kError, "E-multi-writer",
                       "channel '" + id + "' is written by " + std::to_string(writer_roots.size()) + " threads", {}});
    if (reader_roots.size() > 1)
      diags.push_back({Severity::kError, "E-multi-reader",
                       "channel '" + id + "' is read by " + std::to_string(reader_roots.size()) + " threads", {}});
    if (c.sink && !c.readers.empty())
      diags.push_back({Severity::kError, "E-multi-reader", "output channel '" + id + "' is read inside the program", {}});
  }
  if (has_errors(diags)) throw CompileError(diags);
  return out;
}

}  // namespace timetide
