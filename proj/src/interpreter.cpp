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

#include "timetide/interpreter.hpp"

#include <algorithm>
#include <sstream>

#include "timetide/ops.hpp"

namespace timetide {

namespace {

const char* kind_name(TraceRecord::Kind k) {
  switch (k) {
    case TraceRecord::Kind::kPush:
      return "push";
    case TraceRecord::Kind::kPop:
      return "pop";
    case TraceRecord::Kind::kComplete:
      return "body-complete";
  }
  return "?";
}

// Residual terms are rebuilt without the flattening done by k::seq so each
// rewrite corresponds to exactly one rule application.
KTerm with_items(const KTerm& t, std::vector<KTerm> items) {
  auto n = std::make_shared<KNode>(*t);
  n->items = std::move(items);
  n->hashed = false;
  return n;
}

KTerm raw_seq(std::vector<KTerm> items) {
  if (items.empty()) return k::nothing();
  if (items.size() == 1) return items[0];
  auto n = std::make_shared<KNode>();
  n->kind = KKind::kSeq;
  n->items = std::move(items);
  return n;
}

const KNode* leftmost(const KTerm& t) {
  const KNode* n = t.get();
  while ((n->kind == KKind::kSeq || n->kind == KKind::kAbort) && !n->items.empty()) n = n->items[0].get();
  return n;
}

KTerm replace_leftmost(const KTerm& t, const KTerm& with) {
  if ((t->kind == KKind::kSeq || t->kind == KKind::kAbort) && !t->items.empty()) {
    std::vector<KTerm> items = t->items;
    items[0] = replace_leftmost(items[0], with);
    return with_items(t, std::move(items));
  }
  return with;
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_str(std::vector<std::uint8_t>& out, const std::string& s) {
  put_u64(out, s.size());
  out.insert(out.end(), s.begin(), s.end());
}

}  // namespace

nlohmann::ordered_json trace_record_json(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["thread"] = r.thread;
  j["theta"] = r.theta;
  j["kind"] = kind_name(r.kind);
  if (r.kind == TraceRecord::Kind::kComplete) j["chan"] = nullptr;
  else j["chan"] = r.chan;
  j["value"] = to_json(r.value);
  return j;
}

TraceRecord trace_record_from_json(const nlohmann::json& j) {
  TraceRecord r;
  r.thread = j.at("thread").get<std::string>();
  r.theta = j.at("theta").get<std::int64_t>();
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "push") r.kind = TraceRecord::Kind::kPush;
  else if (kind == "pop") r.kind = TraceRecord::Kind::kPop;
  else if (kind == "body-complete") r.kind = TraceRecord::Kind::kComplete;
  else throw std::runtime_error("unknown trace record kind '" + kind + "'");
  if (j.contains("chan") && j["chan"].is_string()) r.chan = j["chan"].get<std::string>();
  if (j.contains("value")) r.value = value_from_json(j["value"]);
  return r;
}

std::string trace_to_jsonl(const Trace& t) {
  std::string out;
  for (const auto& r : t) {
    out += trace_record_json(r).dump();
    out += '\n';
  }
  return out;
}

Trace trace_from_jsonl(const std::string& text) {
  Trace t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) t.push_back(trace_record_from_json(nlohmann::json::parse(line)));
  return t;
}

Trace project(const Trace& t, const std::string& thread) {
  Trace out;
  for (const auto& r : t)
    if (r.thread == thread) out.push_back(r);
  return out;
}

std::map<std::string, Trace> projections(const Trace& t) {
  std::map<std::string, Trace> out;
  for (const auto& r : t) out[r.thread].push_back(r);
  return out;
}

ThreadEngine::ThreadEngine(const KernelProgram& program, const HostTable& host, std::int64_t step_budget)
    : program_(program), host_(host), step_budget_(step_budget) {
  for (const auto& [id, c] : program.channels)
    if (!c.tap_of.empty()) tap_source_[id] = c.tap_of;
}

ThreadState ThreadEngine::initial(std::size_t thread) const {
  ThreadState s;
  const KThread& th = program_.threads.at(thread);
  s.residual = th.body;
  for (const auto& c : th.inbound) s.in[c];
  s.terminated = s.residual->kind == KKind::kNothing;
  return s;
}

Value ThreadEngine::read_channel(ThreadState& s, const std::string& id) const {
  InCell& cell = s.in[id];
  cell.fresh = false;
  return cell.last;
}

Value ThreadEngine::eval(std::size_t thread, ThreadState& s, const Expr& e) const {
  switch (e.kind) {
    case ExprKind::kLiteral:
      return e.literal;
    case ExprKind::kIdent: {
      auto it = s.vars.find(e.name);
      if (it == s.vars.end()) throw ValueError("unbound identifier '" + e.name + "'");
      return it->second;
    }
    case ExprKind::kChanRef: {
      if (!e.channel_array) return read_channel(s, e.channels.at(0));
      Array out;
      for (const auto& id : e.channels) out.push_back(read_channel(s, id));
      return out;
    }
    case ExprKind::kFresh: {
      const Expr& ch = e.args.at(0);
      if (ch.kind == ExprKind::kChanRef) {
        if (!ch.channel_array) return s.in[ch.channels.at(0)].fresh;
        Array out;
        for (const auto& id : ch.channels) out.push_back(s.in[id].fresh);
        return out;
      }
      if (ch.kind == ExprKind::kIndex && ch.args[0].kind == ExprKind::kChanRef) {
        const Value idx = eval(thread, s, ch.args[1]);
        if (!idx.is_int()) throw ValueError("channel index must be an int");
        const auto& ids = ch.args[0].channels;
        if (idx.as_int() < 0 || idx.as_int() >= static_cast<std::int64_t>(ids.size()))
          throw ValueError("channel index " + std::to_string(idx.as_int()) + " out of range");
        return s.in[ids[static_cast<std::size_t>(idx.as_int())]].fresh;
      }
      throw ValueError("fresh() expects a channel");
    }
    case ExprKind::kIndex: {
      const Expr& base = e.args.at(0);
      if (base.kind == ExprKind::kChanRef && base.channel_array) {
        const Value idx = eval(thread, s, e.args[1]);
        if (!idx.is_int()) throw ValueError("channel index must be an int");
        if (idx.as_int() < 0 || idx.as_int() >= static_cast<std::int64_t>(base.channels.size()))
          throw ValueError("channel index " + std::to_string(idx.as_int()) + " out of range");
        return read_channel(s, base.channels[static_cast<std::size_t>(idx.as_int())]);
      }
      const Value arr = eval(thread, s, base);
      const Value idx = eval(thread, s, e.args[1]);
      if (arr.is_empty() || idx.is_empty()) throw ValueError("empty frame in indexing");
      if (!arr.is_array() || !idx.is_int()) throw ValueError("type mismatch in indexing");
      const auto& a = arr.as_array();
      if (idx.as_int() < 0 || idx.as_int() >= static_cast<std::int64_t>(a.size()))
        throw ValueError("index " + std::to_string(idx.as_int()) + " out of range");
      return a[static_cast<std::size_t>(idx.as_int())];
    }
    case ExprKind::kUnary:
      return apply_unary(e.name, eval(thread, s, e.args.at(0)));
    case ExprKind::kBinary: {
      const Value a = eval(thread, s, e.args.at(0));
      if (is_logical_op(e.name) && a.is_bool()) {
        if (e.name == "and" && !a.as_bool()) return false;
        if (e.name == "or" && a.as_bool()) return true;
      }
      return apply_binary(e.name, a, eval(thread, s, e.args.at(1)));
    }
    case ExprKind::kCall: {
      std::vector<Value> args;
      for (const auto& a : e.args) args.push_back(eval(thread, s, a));
      if (e.name == "__array") return Array(std::move(args));
      return host_.call(e.name, args);
    }
  }
  throw ValueError("malformed expression");
}

std::string ThreadEngine::send_channel(std::size_t thread, ThreadState& s, const Expr& target) const {
  if (target.kind == ExprKind::kChanRef && !target.channel_array) return target.channels.at(0);
  if (target.kind == ExprKind::kIndex && target.args[0].kind == ExprKind::kChanRef) {
    const Value idx = eval(thread, s, target.args[1]);
    const auto& ids = target.args[0].channels;
    if (!idx.is_int() || idx.as_int() < 0 || idx.as_int() >= static_cast<std::int64_t>(ids.size()))
      throw ValueError("send target index out of range");
    return ids[static_cast<std::size_t>(idx.as_int())];
  }
  throw ValueError("send target is not a channel");
}

KTerm ThreadEngine::rewrite(std::size_t thread, ThreadState& s, const KTerm& t, Trace* trace, bool& stepped) const {
  stepped = true;
  switch (t->kind) {
    case KKind::kNothing:
    case KKind::kSync:
      stepped = false;
      return t;
    case KKind::kVarDecl:
      s.vars[t->name] = Value();
      return k::nothing();
    case KKind::kAssign:
      s.vars[t->name] = eval(thread, s, t->expr);
      return k::nothing();
    case KKind::kExpr:
      eval(thread, s, t->expr);
      return k::nothing();
    case KKind::kSend: {
      const std::string id = send_channel(thread, s, t->target);
      s.buff[id] = eval(thread, s, t->expr);
      return k::nothing();
    }
    case KKind::kComplete:
      if (trace) trace->push_back({program_.threads[thread].id, s.theta, TraceRecord::Kind::kComplete, "", Value()});
      return k::nothing();
    case KKind::kCheckAbort:
      return k::nothing();
    case KKind::kIf: {
      const Value c = eval(thread, s, t->expr);
      if (c.is_empty()) throw ValueError("empty frame in condition");
      if (!c.is_bool()) throw ValueError("condition is not a bool");
      return c.as_bool() ? t->items[0] : t->items[1];
    }
    case KKind::kLoop:
      return raw_seq({t->items[0], t});
    case KKind::kSeq: {
      if (t->items[0]->kind == KKind::kNothing)
        return raw_seq(std::vector<KTerm>(t->items.begin() + 1, t->items.end()));
      KTerm first = rewrite(thread, s, t->items[0], trace, stepped);
      if (!stepped) return t;
      std::vector<KTerm> items = t->items;
      items[0] = first;
      return with_items(t, std::move(items));
    }
    case KKind::kAbort: {
      const KTerm& body = t->items[0];
      if (body->kind == KKind::kNothing) return k::nothing();
      const KNode* head = leftmost(body);
      if (head->kind == KKind::kCheckAbort && head->name == t->name) {
        const Value c = eval(thread, s, t->expr);
        if (c.is_empty()) throw ValueError("empty frame in abort condition");
        if (!c.is_bool()) throw ValueError("abort condition is not a bool");
        if (c.as_bool()) return k::nothing();
      }
      KTerm inner = rewrite(thread, s, body, trace, stepped);
      if (!stepped) return t;
      return with_items(t, {inner});
    }
  }
  stepped = false;
  return t;
}

bool ThreadEngine::step(std::size_t thread, ThreadState& s, Trace* trace) const {
  if (s.terminated) return false;
  bool stepped = false;
  try {
    KTerm next = rewrite(thread, s, s.residual, trace, stepped);
    if (stepped) s.residual = next;
  } catch (const ValueError& e) {
    throw RuntimeError("thread " + program_.threads[thread].id + " at theta " + std::to_string(s.theta) + ": " +
                       e.what());
  }
  if (s.residual->kind == KKind::kNothing) s.terminated = true;
  return stepped;
}

void ThreadEngine::settle(std::size_t thread, ThreadState& s, Trace* trace) const {
  std::int64_t steps = 0;
  while (step(thread, s, trace)) {
    if (++steps > step_budget_)
      throw RuntimeError("thread " + program_.threads[thread].id + " at theta " + std::to_string(s.theta) +
                         ": step budget exhausted without reaching a sync");
  }
  if (!s.terminated && leftmost(s.residual)->kind != KKind::kSync)
    throw RuntimeError("thread " + program_.threads[thread].id + ": stuck term\n" + print_term(s.residual));
}

std::optional<std::int64_t> ThreadEngine::pending_sync(const ThreadState& s) {
  if (s.terminated) return std::nullopt;
  const KNode* head = leftmost(s.residual);
  if (head->kind != KKind::kSync) return std::nullopt;
  return head->amount;
}

bool ThreadEngine::finished(const ThreadState& s, std::int64_t tick_limit) {
  return s.terminated || s.theta >= tick_limit;
}

std::int64_t ThreadEngine::effective_sync(const ThreadState& s, std::int64_t tick_limit) {
  const auto d = pending_sync(s);
  if (!d) return 0;
  return std::min(*d, tick_limit - s.theta);
}

void ThreadEngine::unit_tick(std::size_t thread, ThreadState& s, TickIO& io, Trace* trace) const {
  const KThread& th = program_.threads[thread];
  for (const auto& id : th.inbound) {
    Value v = io.pop(id);
    if (v.is_empty()) continue;
    if (trace) trace->push_back({th.id, s.theta, TraceRecord::Kind::kPop, id, v});
    InCell& cell = s.in[id];
    cell.last = std::move(v);
    cell.fresh = true;
  }
  for (const auto& id : th.outbound) {
    auto tap = tap_source_.find(id);
    const std::string& src = tap == tap_source_.end() ? id : tap->second;
    auto b = s.buff.find(src);
    const Value v = b == s.buff.end() ? Value() : b->second;
    io.push(id, v);
    if (trace && !v.is_empty() && tap == tap_source_.end())
      trace->push_back({th.id, s.theta, TraceRecord::Kind::kPush, id, v});
  }
  s.buff.clear();
  ++s.theta;
}

void ThreadEngine::consume_sync(ThreadState& s) { s.residual = replace_leftmost(s.residual, k::nothing()); }

void ThreadEngine::react(std::size_t thread, ThreadState& s, TickIO& io, std::int64_t tick_limit,
                         Trace* trace) const {
  const auto d = pending_sync(s);
  if (!d) throw RuntimeError("thread " + program_.threads[thread].id + " has no pending sync");
  const std::int64_t run = std::min(*d, tick_limit - s.theta);
  for (std::int64_t i = 0; i < run; ++i) unit_tick(thread, s, io, trace);
  finish_sync(thread, s, run, tick_limit, trace);
}

void ThreadEngine::finish_sync(std::size_t thread, ThreadState& s, std::int64_t ran, std::int64_t tick_limit,
                               Trace* trace) const {
  const auto d = pending_sync(s);
  if (!d) throw RuntimeError("thread " + program_.threads[thread].id + " has no pending sync");
  if (ran >= *d) consume_sync(s);
  else s.residual = replace_leftmost(s.residual, k::sync(*d - ran));
  if (s.theta < tick_limit) settle(thread, s, trace);
}

void serialize_state(const ThreadState& s, std::vector<std::uint8_t>& out) {
  put_u64(out, static_cast<std::uint64_t>(s.theta));
  out.push_back(s.terminated ? 1 : 0);
  put_u64(out, term_hash(s.residual));
  put_u64(out, s.vars.size());
  for (const auto& [k, v] : s.vars) {
    put_str(out, k);
    encode_value(v, out);
  }
  put_u64(out, s.in.size());
  for (const auto& [k, c] : s.in) {
    put_str(out, k);
    encode_value(c.last, out);
    out.push_back(c.fresh ? 1 : 0);
  }
  put_u64(out, s.buff.size());
  for (const auto& [k, v] : s.buff) {
    put_str(out, k);
    encode_value(v, out);
  }
}

}  // namespace timetide
