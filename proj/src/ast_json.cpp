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

#include "timetide/ast_json.hpp"

namespace timetide {

namespace {

using nlohmann::json;

json span_json(const SourceSpan& s) {
  return json::array({s.line, s.column, s.end_line, s.end_column});
}

const char* expr_kind_name(ExprKind k) {
  switch (k) {
    case ExprKind::kLiteral: return "literal";
    case ExprKind::kIdent: return "ident";
    case ExprKind::kChanRef: return "chan";
    case ExprKind::kFresh: return "fresh";
    case ExprKind::kIndex: return "index";
    case ExprKind::kUnary: return "unary";
    case ExprKind::kBinary: return "binary";
    case ExprKind::kCall: return "call";
  }
  return "?";
}

const char* stmt_kind_name(StmtKind k) {
  switch (k) {
    case StmtKind::kNothing: return "nothing";
    case StmtKind::kBlock: return "block";
    case StmtKind::kPar: return "par";
    case StmtKind::kRun: return "run";
    case StmtKind::kForeach: return "foreach";
    case StmtKind::kPareach: return "pareach";
    case StmtKind::kVar: return "var";
    case StmtKind::kChanBlock: return "chan";
    case StmtKind::kTask: return "task";
    case StmtKind::kAbort: return "abort";
    case StmtKind::kAssign: return "assign";
    case StmtKind::kIf: return "if";
    case StmtKind::kExpr: return "expr";
    case StmtKind::kSend: return "send";
    case StmtKind::kInstance: return "instance";
  }
  return "?";
}

json type_json(const TypeRef& t, bool spans) {
  json j = {{"name", t.name}};
  if (t.array_size) j["size"] = expr_to_json(*t.array_size, spans);
  return j;
}

json channel_json(const ChannelDecl& c, bool spans) {
  json j = {{"name", c.name}, {"type", type_json(c.type, spans)}, {"delay", expr_to_json(c.delay, spans)}};
  if (c.initial) j["initial"] = expr_to_json(*c.initial, spans);
  if (c.sink) j["sink"] = true;
  if (!c.tap_of.empty()) j["tap_of"] = c.tap_of;
  if (spans) j["span"] = span_json(c.span);
  return j;
}

}  // namespace

json expr_to_json(const Expr& e, bool spans) {
  json j = {{"kind", expr_kind_name(e.kind)}};
  switch (e.kind) {
    case ExprKind::kLiteral:
      j["value"] = to_json(e.literal);
      j["type"] = e.literal.type_name();
      break;
    case ExprKind::kIdent:
      j["name"] = e.name;
      break;
    case ExprKind::kChanRef:
      j["channels"] = e.channels;
      if (e.channel_array) j["array"] = true;
      break;
    case ExprKind::kUnary:
    case ExprKind::kBinary:
      j["op"] = e.name;
      break;
    case ExprKind::kCall:
      j["callee"] = e.name;
      break;
    default:
      break;
  }
  if (!e.args.empty()) {
    json args = json::array();
    for (const auto& a : e.args) args.push_back(expr_to_json(a, spans));
    j["args"] = std::move(args);
  }
  if (spans) j["span"] = span_json(e.span);
  return j;
}

json stmt_to_json(const Stmt& s, bool spans) {
  json j = {{"kind", stmt_kind_name(s.kind)}};
  if (!s.name.empty()) j["name"] = s.name;
  if (!s.type.name.empty()) j["type"] = type_json(s.type, spans);
  if (!s.exprs.empty()) {
    json a = json::array();
    for (const auto& e : s.exprs) a.push_back(expr_to_json(e, spans));
    j["exprs"] = std::move(a);
  }
  if (!s.children.empty()) {
    json a = json::array();
    for (const auto& c : s.children) a.push_back(stmt_to_json(c, spans));
    j["children"] = std::move(a);
  }
  if (!s.bindings.empty()) {
    json a = json::array();
    for (const auto& b : s.bindings) {
      json bj = {{"actual", expr_to_json(b.actual, spans)}};
      if (!b.port.empty()) bj["port"] = b.port;
      a.push_back(std::move(bj));
    }
    j["bindings"] = std::move(a);
  }
  if (!s.channels.empty()) {
    json a = json::array();
    for (const auto& c : s.channels) a.push_back(channel_json(c, spans));
    j["channels"] = std::move(a);
  }
  if (!s.task_args.empty()) {
    json a = json::object();
    for (const auto& [k, e] : s.task_args) a[k] = expr_to_json(e, spans);
    j["task"] = std::move(a);
  }
  if (s.weak) j["weak"] = true;
  if (s.immediate) j["immediate"] = true;
  if (spans) j["span"] = span_json(s.span);
  return j;
}

json ast_to_json(const SurfaceProgram& p, bool spans) {
  json mods = json::array();
  for (const auto& m : p.modules) {
    json ports = json::array();
    for (const auto& port : m.ports) {
      json pj = {{"name", port.name},
                 {"direction", port.direction == PortDirection::kInput ? "input" : "output"},
                 {"type", type_json(port.type, spans)}};
      if (port.is_const) pj["const"] = true;
      if (port.initial) pj["initial"] = expr_to_json(*port.initial, spans);
      if (spans) pj["span"] = span_json(port.span);
      ports.push_back(std::move(pj));
    }
    json consts = json::array();
    for (const auto& c : m.consts) {
      json cj = {{"name", c.name}, {"type", type_json(c.type, spans)}, {"value", expr_to_json(c.value, spans)}};
      if (spans) cj["span"] = span_json(c.span);
      consts.push_back(std::move(cj));
    }
    json chans = json::array();
    for (const auto& c : m.channels) chans.push_back(channel_json(c, spans));
    json mj = {{"name", m.name},
               {"ports", std::move(ports)},
               {"consts", std::move(consts)},
               {"channels", std::move(chans)},
               {"body", stmt_to_json(m.body, spans)}};
    if (spans) mj["span"] = span_json(m.span);
    mods.push_back(std::move(mj));
  }
  return {{"format", "timetide-ast"}, {"version", kAstFormatVersion}, {"entry", p.entry}, {"modules", std::move(mods)}};
}

}  // namespace timetide
