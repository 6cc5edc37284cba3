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

#include <sstream>

#include "timetide/parser.hpp"

namespace timetide {

namespace {

int precedence(const std::string& op) {
  if (op == "or") return 1;
  if (op == "and") return 2;
  if (op == "==" || op == "!=") return 3;
  if (op == "<" || op == ">" || op == "<=" || op == ">=") return 4;
  if (op == "+" || op == "-") return 5;
  return 6;
}

std::string operand(const Expr& e) {
  if (e.kind == ExprKind::kBinary) return "(" + pretty_print(e) + ")";
  return pretty_print(e);
}

std::string type_text(const TypeRef& t) {
  std::string s = t.name;
  if (t.array_size) s += "[" + pretty_print(*t.array_size) + "]";
  return s;
}

std::string channel_text(const ChannelDecl& c) {
  std::string s = c.name + " : " + type_text(c.type) + " delay " + pretty_print(c.delay);
  if (c.initial) s += " = " + pretty_print(*c.initial);
  return s;
}

class Printer {
 public:
  std::ostringstream out;

  void line(int indent, const std::string& text) { out << std::string(indent * 2, ' ') << text << "\n"; }

  // Prints `s` as a statement list; braces group parallel arms.
  void stmt(const Stmt& s, int ind) {
    switch (s.kind) {
      case StmtKind::kNothing:
        line(ind, "nothing;");
        break;
      case StmtKind::kBlock:
        for (const auto& c : s.children) {
          if (c.kind == StmtKind::kPar) {
            line(ind, "{");
            stmt(c, ind + 1);
            line(ind, "};");
          } else {
            stmt(c, ind);
          }
        }
        break;
      case StmtKind::kPar:
        line(ind, "{");
        stmt(s.children[0], ind + 1);
        line(ind, "}");
        line(ind, "<>");
        if (s.children[1].kind == StmtKind::kPar) {
          stmt(s.children[1], ind);
        } else {
          line(ind, "{");
          stmt(s.children[1], ind + 1);
          line(ind, "}");
        }
        break;
      case StmtKind::kRun: {
        std::string t = "run " + s.name + "(";
        for (std::size_t i = 0; i < s.bindings.size(); ++i) {
          if (i) t += ", ";
          const auto& b = s.bindings[i];
          t += operand(b.actual);
          if (!b.port.empty()) t += "/" + b.port;
        }
        line(ind, t + ");");
        break;
      }
      case StmtKind::kForeach:
      case StmtKind::kPareach:
        line(ind, std::string(s.kind == StmtKind::kForeach ? "foreach " : "pareach ") + s.name + " in " +
                      pretty_print(s.exprs[0]) + " {");
        stmt(s.children[0], ind + 1);
        line(ind, "}");
        break;
      case StmtKind::kVar: {
        std::string t = "var " + s.name;
        if (!s.type.name.empty()) t += " : " + type_text(s.type);
        if (!s.exprs.empty()) t += " = " + pretty_print(s.exprs[0]);
        line(ind, t + " in");
        stmt(s.children[0], ind + 1);
        line(ind, "end var;");
        break;
      }
      case StmtKind::kChanBlock: {
        std::string t = "chan ";
        for (std::size_t i = 0; i < s.channels.size(); ++i) t += (i ? ", " : "") + channel_text(s.channels[i]);
        line(ind, t + " in");
        stmt(s.children[0], ind + 1);
        line(ind, "end chan;");
        break;
      }
      case StmtKind::kTask: {
        std::string t = "task(";
        for (std::size_t i = 0; i < s.task_args.size(); ++i)
          t += (i ? ", " : "") + s.task_args[i].first + "=" + pretty_print(s.task_args[i].second);
        line(ind, t + "):");
        stmt(s.children[0], ind + 1);
        line(ind, "end task;");
        break;
      }
      case StmtKind::kAbort:
        line(ind, s.weak ? "weak abort {" : "abort {");
        stmt(s.children[0], ind + 1);
        line(ind, std::string("} when ") + (s.immediate ? "immediate " : "") + pretty_print(s.exprs[0]) + ";");
        break;
      case StmtKind::kAssign:
        line(ind, s.name + " = " + pretty_print(s.exprs[0]) + ";");
        break;
      case StmtKind::kIf:
        line(ind, "if (" + pretty_print(s.exprs[0]) + ") {");
        stmt(s.children[0], ind + 1);
        if (s.children.size() > 1 && s.children[1].kind != StmtKind::kNothing) {
          line(ind, "} else {");
          stmt(s.children[1], ind + 1);
        }
        line(ind, "}");
        break;
      case StmtKind::kExpr:
        line(ind, pretty_print(s.exprs[0]) + ";");
        break;
      case StmtKind::kSend: {
        const Expr& target = s.exprs[0];
        std::string t = "send ";
        if (target.kind == ExprKind::kIndex)
          t += pretty_print(target.args[0]) + "[" + pretty_print(target.args[1]) + "]";
        else
          t += pretty_print(target);
        line(ind, t + "(" + pretty_print(s.exprs[1]) + ");");
        break;
      }
      case StmtKind::kInstance:
        line(ind, "// instance " + s.name);
        line(ind, "{");
        stmt(s.children[0], ind + 1);
        line(ind, "}");
        break;
    }
  }
};

}  // namespace

std::string pretty_print(const Expr& e) {
  switch (e.kind) {
    case ExprKind::kLiteral:
      return to_string(e.literal);
    case ExprKind::kIdent:
      return e.name;
    case ExprKind::kChanRef:
      if (e.channel_array) {
        std::string s = "{";
        for (std::size_t i = 0; i < e.channels.size(); ++i) s += (i ? ", " : "") + e.channels[i];
        return s + "}";
      }
      return e.channels.empty() ? e.name : e.channels[0];
    case ExprKind::kFresh:
      return "fresh(" + pretty_print(e.args[0]) + ")";
    case ExprKind::kIndex:
      return operand(e.args[0]) + "[" + pretty_print(e.args[1]) + "]";
    case ExprKind::kUnary: {
      const std::string a = operand(e.args[0]);
      return e.name + (a.rfind('-', 0) == 0 ? "(" + a + ")" : a);
    }
    case ExprKind::kBinary: {
      const int p = precedence(e.name);
      auto side = [&](const Expr& x, bool right) {
        if (x.kind != ExprKind::kBinary) return operand(x);
        const int q = precedence(x.name);
        if (q > p || (q == p && !right)) return pretty_print(x);
        return "(" + pretty_print(x) + ")";
      };
      return side(e.args[0], false) + " " + e.name + " " + side(e.args[1], true);
    }
    case ExprKind::kCall: {
      std::string s = e.name + "(";
      for (std::size_t i = 0; i < e.args.size(); ++i) s += (i ? ", " : "") + pretty_print(e.args[i]);
      return s + ")";
    }
  }
  return "?";
}

std::string pretty_print(const SurfaceProgram& program) {
  Printer p;
  for (const auto& m : program.modules) {
    p.line(0, "module " + m.name + ":");
    for (const auto& port : m.ports) {
      std::string t = port.direction == PortDirection::kInput ? "input " : "output ";
      if (port.is_const) t += "const ";
      t += port.name + " : " + type_text(port.type);
      if (port.initial) t += " = " + pretty_print(*port.initial);
      p.line(1, t + ";");
    }
    for (const auto& c : m.consts)
      p.line(1, "const " + c.name + " : " + type_text(c.type) + " = " + pretty_print(c.value) + ";");
    for (const auto& c : m.channels) p.line(1, "channel " + channel_text(c) + ";");
    p.stmt(m.body, 1);
    p.line(0, "end module");
    p.out << "\n";
  }
  return p.out.str();
}

}  // namespace timetide
