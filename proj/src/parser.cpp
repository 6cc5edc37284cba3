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

#include "timetide/parser.hpp"

#include <cctype>
#include <charconv>
#include <set>

namespace timetide {

namespace {

enum class Tok { kIdent, kInt, kFloat, kPunct, kEof };

struct Token {
  Tok kind = Tok::kEof;
  std::string text;
  SourceSpan span;
};

const std::set<std::string, std::less<>> kKeywords = {
    "module", "end",  "input",   "output", "const",  "channel", "chan",      "run",  "foreach",
    "pareach", "in",  "var",     "task",   "abort",  "weak",    "when",      "immediate",
    "if",     "then", "else",    "send",   "true",   "false",   "and",       "or",   "not",
    "delay",  "nothing"};

bool is_keyword(std::string_view s) { return kKeywords.count(s) != 0; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      const SourceSpan start{line, col, line, col};
      advance(2);
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) advance(1);
      if (i + 1 >= src.size()) throw CompileError("E-syntax", "unterminated block comment", start);
      advance(2);
      continue;
    }
    Token t;
    t.span.line = line;
    t.span.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::kIdent;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      bool is_float = false;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        is_float = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          is_float = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = is_float ? Tok::kFloat : Tok::kInt;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else {
      static const char* kTwo[] = {"<>", ":=", "==", "!=", "<=", ">=", "&&", "||"};
      t.kind = Tok::kPunct;
      bool matched = false;
      for (const char* two : kTwo) {
        if (src.substr(i, 2) == two) {
          t.text = two;
          matched = true;
          break;
        }
      }
      if (!matched) {
        static const std::string_view kOne = "()[]{},;:=+-*/%<>!";
        if (kOne.find(c) == std::string_view::npos)
          throw CompileError("E-syntax", std::string("unexpected character '") + c + "'", t.span);
        t.text = std::string(1, c);
      }
      advance(t.text.size());
    }
    t.span.end_line = line;
    t.span.end_column = col;
    out.push_back(std::move(t));
  }
  Token eof;
  eof.kind = Tok::kEof;
  eof.span = {line, col, line, col};
  out.push_back(eof);
  return out;
}

SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
  return {a.line, a.column, b.end_line, b.end_column};
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  SurfaceProgram program() {
    SurfaceProgram p;
    while (!at_eof()) {
      if (!is_kw("module")) fail_expected({"'module'"});
      ModuleDecl m = module();
      if (p.find_module(m.name))
        throw CompileError("E-dup-module", "duplicate module name '" + m.name + "'", m.span);
      p.modules.push_back(std::move(m));
    }
    if (p.modules.empty()) throw CompileError("E-empty", "no modules declared", peek().span);
    return p;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at_eof() const { return peek().kind == Tok::kEof; }
  const Token& take() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  const SourceSpan& last_span() const { return toks_[pos_ == 0 ? 0 : pos_ - 1].span; }

  bool is_punct(std::string_view p, std::size_t k = 0) const {
    return peek(k).kind == Tok::kPunct && peek(k).text == p;
  }
  bool is_kw(std::string_view w, std::size_t k = 0) const {
    return peek(k).kind == Tok::kIdent && peek(k).text == w;
  }
  bool is_ident(std::size_t k = 0) const {
    return peek(k).kind == Tok::kIdent && !is_keyword(peek(k).text);
  }
  bool accept_punct(std::string_view p) {
    if (!is_punct(p)) return false;
    take();
    return true;
  }
  bool accept_kw(std::string_view w) {
    if (!is_kw(w)) return false;
    take();
    return true;
  }

  [[noreturn]] void fail_expected(std::vector<std::string> expected) const {
    std::string msg = "expected ";
    if (expected.size() > 1) msg += "one of ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (i) msg += ", ";
      msg += expected[i];
    }
    const Token& t = peek();
    msg += "; got " + (t.kind == Tok::kEof ? std::string("end of input") : "'" + t.text + "'");
    throw CompileError("E-syntax", msg, t.span);
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail_expected({"'" + std::string(p) + "'"});
  }
  void expect_kw(std::string_view w) {
    if (!accept_kw(w)) fail_expected({"'" + std::string(w) + "'"});
  }
  std::string expect_ident() {
    if (!is_ident()) fail_expected({"identifier"});
    return take().text;
  }
  void skip_semis() {
    while (accept_punct(";")) {
    }
  }
  // `end` optionally followed by the construct keyword(s).
  void expect_end(std::initializer_list<std::string_view> tails) {
    expect_kw("end");
    for (auto t : tails) {
      if (accept_kw(t)) break;
    }
  }

  ModuleDecl module() {
    const SourceSpan start = peek().span;
    expect_kw("module");
    ModuleDecl m;
    m.name = expect_ident();
    expect_punct(":");
    for (;;) {
      if (is_kw("input") || is_kw("output")) {
        ports(m);
      } else if (is_kw("const")) {
        m.consts.push_back(const_decl());
      } else if (is_kw("channel") || is_kw("chan")) {
        const std::size_t save = pos_;
        take();
        auto decls = channel_decls();
        if (accept_punct(";")) {
          for (auto& d : decls) m.channels.push_back(std::move(d));
        } else {
          pos_ = save;  // a `chan ... in ... end` block starts the body
          break;
        }
      } else {
        break;
      }
    }
    m.body = par_list();
    expect_end({"module"});
    skip_semis();
    m.span = join(start, last_span());
    return m;
  }

  void ports(ModuleDecl& m) {
    const SourceSpan start = peek().span;
    const PortDirection dir = take().text == "input" ? PortDirection::kInput : PortDirection::kOutput;
    const bool is_const = dir == PortDirection::kInput && accept_kw("const");
    std::vector<std::string> names{expect_ident()};
    while (accept_punct(",")) names.push_back(expect_ident());
    expect_punct(":");
    TypeRef type = type_ref();
    std::optional<Expr> initial;
    if (accept_punct("=") || accept_punct(":=")) initial = expr();
    expect_punct(";");
    for (auto& n : names) {
      PortDecl p;
      p.name = n;
      p.direction = dir;
      p.is_const = is_const;
      p.type = type;
      p.initial = initial;
      p.span = join(start, last_span());
      m.ports.push_back(std::move(p));
    }
  }

  ConstDecl const_decl() {
    const SourceSpan start = peek().span;
    expect_kw("const");
    ConstDecl c;
    c.name = expect_ident();
    expect_punct(":");
    c.type = type_ref();
    if (!accept_punct("=")) expect_punct(":=");
    c.value = expr();
    expect_punct(";");
    c.span = join(start, last_span());
    return c;
  }

  TypeRef type_ref() {
    TypeRef t;
    if (!is_ident() && !is_kw("integer")) fail_expected({"type name"});
    t.name = take().text;
    if (accept_punct("[")) {
      t.array_size = expr();
      expect_punct("]");
    }
    return t;
  }

  std::vector<ChannelDecl> channel_decls() {
    std::vector<ChannelDecl> out;
    do {
      if (!is_ident()) break;  // trailing comma before `in`
      const SourceSpan start = peek().span;
      ChannelDecl c;
      c.name = expect_ident();
      expect_punct(":");
      c.type = type_ref();
      expect_kw("delay");
      c.delay = expr();
      if (accept_punct("=")) c.initial = expr();
      c.span = join(start, last_span());
      out.push_back(std::move(c));
    } while (accept_punct(","));
    if (out.empty()) fail_expected({"channel declaration"});
    return out;
  }

  bool at_list_end() const {
    return at_eof() || is_kw("end") || is_punct("}") || is_kw("when") || is_kw("else") || is_punct("<>");
  }

  // t <> u, right-associative, binding looser than `;`.
  Stmt par_list() {
    const SourceSpan start = peek().span;
    Stmt left = seq();
    if (accept_punct("<>")) {
      if (at_eof() || is_kw("end") || is_punct("}") || is_kw("when") || is_kw("else") || is_punct("<>"))
        fail_expected({"statement"});
      Stmt right = par_list();
      return Stmt::par(std::move(left), std::move(right), join(start, last_span()));
    }
    return left;
  }

  Stmt seq() {
    const SourceSpan start = peek().span;
    std::vector<Stmt> items;
    skip_semis();
    while (!at_list_end()) {
      items.push_back(stmt());
      const bool closed_by_brace = pos_ > 0 && toks_[pos_ - 1].kind == Tok::kPunct && toks_[pos_ - 1].text == "}";
      if (!accept_punct(";") && !closed_by_brace && !at_list_end()) fail_expected({"';'"});
      skip_semis();
    }
    if (items.empty()) return Stmt::nothing(start);
    if (items.size() == 1) return std::move(items.front());
    return Stmt::block(std::move(items), join(start, last_span()));
  }

  Stmt braced() {
    expect_punct("{");
    Stmt s = par_list();
    expect_punct("}");
    return s;
  }

  Stmt stmt() {
    const SourceSpan start = peek().span;
    Stmt s;
    if (is_punct("{")) {
      s = braced();
      return s;
    }
    if (accept_kw("nothing")) {
      s = Stmt::nothing(start);
    } else if (accept_kw("run")) {
      s.kind = StmtKind::kRun;
      s.name = expect_ident();
      if (is_punct("(") || is_punct("[")) {
        const std::string closer = take().text == "(" ? ")" : "]";
        if (!accept_punct(closer)) {
          do {
            s.bindings.push_back(binding());
          } while (accept_punct(","));
          expect_punct(closer);
        }
      }
    } else if (is_kw("foreach") || is_kw("pareach")) {
      s.kind = take().text == "foreach" ? StmtKind::kForeach : StmtKind::kPareach;
      s.name = expect_ident();
      expect_kw("in");
      s.exprs.push_back(expr());
      s.children.push_back(braced());
    } else if (accept_kw("var")) {
      s.kind = StmtKind::kVar;
      s.name = expect_ident();
      if (accept_punct(":")) s.type = type_ref();
      if (accept_punct("=") || accept_punct(":=")) s.exprs.push_back(expr());
      if (s.type.name.empty() && accept_punct(":")) s.type = type_ref();
      expect_kw("in");
      s.children.push_back(par_list());
      expect_end({"var"});
    } else if (is_kw("chan") || is_kw("channel")) {
      take();
      s.kind = StmtKind::kChanBlock;
      s.channels = channel_decls();
      expect_kw("in");
      s.children.push_back(par_list());
      expect_end({"chan", "channel"});
    } else if (accept_kw("task")) {
      s.kind = StmtKind::kTask;
      expect_punct("(");
      do {
        const std::string key = expect_ident();
        expect_punct("=");
        s.task_args.emplace_back(key, expr());
      } while (accept_punct(","));
      expect_punct(")");
      accept_punct(":");
      s.children.push_back(par_list());
      expect_end({"task"});
    } else if (is_kw("weak") || is_kw("abort")) {
      s.kind = StmtKind::kAbort;
      s.weak = accept_kw("weak");
      expect_kw("abort");
      s.children.push_back(par_list());
      expect_kw("when");
      s.immediate = accept_kw("immediate");
      s.exprs.push_back(expr());
      if (is_kw("end") && is_kw("abort", 1)) {
        take();
        take();
      }
    } else if (accept_kw("if")) {
      s = if_rest(start);
    } else if (accept_kw("send")) {
      s.kind = StmtKind::kSend;
      const SourceSpan ts = peek().span;
      Expr target = Expr::ident(expect_ident(), ts);
      if (accept_punct("[")) {
        Expr idx = expr();
        expect_punct("]");
        target = Expr::index(std::move(target), std::move(idx), join(ts, last_span()));
      }
      expect_punct("(");
      s.exprs.push_back(std::move(target));
      s.exprs.push_back(expr());
      expect_punct(")");
    } else if (is_ident() && (is_punct("=", 1) || is_punct(":=", 1))) {
      s.kind = StmtKind::kAssign;
      s.name = take().text;
      take();
      s.exprs.push_back(expr());
    } else if (is_ident() && (peek(1).kind == Tok::kIdent || peek(1).kind == Tok::kInt ||
                              peek(1).kind == Tok::kFloat)) {
      throw CompileError("E-unknown-stmt", "unknown statement '" + peek().text + "'", peek().span);
    } else if (peek().kind == Tok::kIdent && is_keyword(peek().text) && !is_kw("true") &&
               !is_kw("false") && !is_kw("not")) {
      throw CompileError("E-unknown-stmt",
                         "unknown statement starting with '" + peek().text +
                             "'; expected one of run, foreach, pareach, var, chan, task, abort, if, "
                             "send, assignment or expression",
                         peek().span);
    } else {
      s.kind = StmtKind::kExpr;
      s.exprs.push_back(expr());
    }
    s.span = join(start, last_span());
    return s;
  }

  Stmt if_rest(const SourceSpan& start) {
    Stmt s;
    s.kind = StmtKind::kIf;
    s.exprs.push_back(expr());
    if (is_punct("{")) {
      s.children.push_back(braced());
      if (accept_kw("else")) {
        if (is_kw("if")) {
          const SourceSpan es = peek().span;
          take();
          s.children.push_back(if_rest(es));
        } else {
          s.children.push_back(braced());
        }
      } else {
        s.children.push_back(Stmt::nothing(last_span()));
      }
    } else {
      expect_kw("then");
      s.children.push_back(par_list());
      if (accept_kw("else"))
        s.children.push_back(par_list());
      else
        s.children.push_back(Stmt::nothing(last_span()));
      expect_end({"if"});
    }
    s.span = join(start, last_span());
    return s;
  }

  Binding binding() {
    const SourceSpan start = peek().span;
    Binding b;
    b.actual = expr(true);
    if (accept_punct("/")) b.port = expect_ident();
    b.span = join(start, last_span());
    return b;
  }

  // ---- expressions -------------------------------------------------------

  Expr expr(bool binding_mode = false) { return or_expr(binding_mode); }

  Expr or_expr(bool bm) {
    Expr l = and_expr(bm);
    while (is_kw("or") || is_punct("||")) {
      take();
      Expr r = and_expr(bm);
      const SourceSpan sp = join(l.span, r.span);
      l = Expr::binary("or", std::move(l), std::move(r), sp);
    }
    return l;
  }

  Expr and_expr(bool bm) {
    Expr l = eq_expr(bm);
    while (is_kw("and") || is_punct("&&")) {
      take();
      Expr r = eq_expr(bm);
      const SourceSpan sp = join(l.span, r.span);
      l = Expr::binary("and", std::move(l), std::move(r), sp);
    }
    return l;
  }

  Expr eq_expr(bool bm) {
    Expr l = rel_expr(bm);
    while (is_punct("==") || is_punct("!=")) {
      const std::string op = take().text;
      Expr r = rel_expr(bm);
      const SourceSpan sp = join(l.span, r.span);
      l = Expr::binary(op, std::move(l), std::move(r), sp);
    }
    return l;
  }

  Expr rel_expr(bool bm) {
    Expr l = add_expr(bm);
    while (is_punct("<") || is_punct(">") || is_punct("<=") || is_punct(">=")) {
      const std::string op = take().text;
      Expr r = add_expr(bm);
      const SourceSpan sp = join(l.span, r.span);
      l = Expr::binary(op, std::move(l), std::move(r), sp);
    }
    return l;
  }

  Expr add_expr(bool bm) {
    Expr l = mul_expr(bm);
    while (is_punct("+") || is_punct("-")) {
      const std::string op = take().text;
      Expr r = mul_expr(bm);
      const SourceSpan sp = join(l.span, r.span);
      l = Expr::binary(op, std::move(l), std::move(r), sp);
    }
    return l;
  }

  bool binding_slash_ahead() const {
    return is_punct("/") && is_ident(1) && (is_punct(",", 2) || is_punct(")", 2) || is_punct("]", 2));
  }

  Expr mul_expr(bool bm) {
    Expr l = unary_expr(bm);
    while (is_punct("*") || is_punct("/") || is_punct("%")) {
      if (bm && binding_slash_ahead()) break;
      const std::string op = take().text;
      Expr r = unary_expr(bm);
      const SourceSpan sp = join(l.span, r.span);
      l = Expr::binary(op, std::move(l), std::move(r), sp);
    }
    return l;
  }

  Expr unary_expr(bool bm) {
    const SourceSpan start = peek().span;
    if (is_punct("!") || is_punct("-") || is_kw("not")) {
      std::string op = take().text;
      if (op == "not") op = "!";
      Expr a = unary_expr(bm);
      const SourceSpan sp = join(start, a.span);
      if (op == "-" && a.kind == ExprKind::kLiteral && a.literal.is_int())
        return Expr::lit(Value(-a.literal.as_int()), sp);
      if (op == "-" && a.kind == ExprKind::kLiteral && a.literal.is_float())
        return Expr::lit(Value(-a.literal.as_float()), sp);
      return Expr::unary(op, std::move(a), sp);
    }
    return postfix_expr();
  }

  Expr postfix_expr() {
    Expr e = primary();
    while (accept_punct("[")) {
      Expr idx = expr();
      expect_punct("]");
      const SourceSpan sp = join(e.span, last_span());
      e = Expr::index(std::move(e), std::move(idx), sp);
    }
    return e;
  }

  Expr primary() {
    const Token& t = peek();
    const SourceSpan start = t.span;
    if (t.kind == Tok::kInt) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) throw CompileError("E-syntax", "integer literal out of range", t.span);
      take();
      return Expr::lit(Value(v), start);
    }
    if (t.kind == Tok::kFloat) {
      const double v = std::stod(t.text);
      take();
      return Expr::lit(Value(v), start);
    }
    if (accept_kw("true")) return Expr::lit(Value(true), start);
    if (accept_kw("false")) return Expr::lit(Value(false), start);
    if (accept_punct("(")) {
      Expr e = expr();
      expect_punct(")");
      return e;
    }
    if (is_ident()) {
      std::string name = take().text;
      if (accept_punct("(")) {
        std::vector<Expr> args;
        if (!accept_punct(")")) {
          do {
            args.push_back(expr());
          } while (accept_punct(","));
          expect_punct(")");
        }
        const SourceSpan sp = join(start, last_span());
        if (name == "fresh") {
          if (args.size() != 1) throw CompileError("E-syntax", "fresh takes exactly one channel", sp);
          return Expr::fresh(std::move(args.front()), sp);
        }
        return Expr::call(std::move(name), std::move(args), sp);
      }
      return Expr::ident(std::move(name), start);
    }
    fail_expected({"expression"});
  }
};

// Modules not instantiated anywhere are entry candidates.
void collect_runs(const Stmt& s, std::set<std::string>& out) {
  if (s.kind == StmtKind::kRun) out.insert(s.name);
  for (const auto& c : s.children) collect_runs(c, out);
}

std::string pick_entry(const SurfaceProgram& p) {
  std::set<std::string> used;
  for (const auto& m : p.modules) collect_runs(m.body, used);
  std::vector<std::string> roots;
  for (const auto& m : p.modules)
    if (!used.count(m.name)) roots.push_back(m.name);
  if (roots.size() == 1) return roots.front();
  for (const auto& r : roots)
    if (r == "toplevel" || r == "main") return r;
  if (roots.empty())
    throw CompileError("E-entry", "no entry module: every module is instantiated by another",
                       p.modules.front().span);
  std::string names;
  for (const auto& r : roots) names += (names.empty() ? "" : ", ") + r;
  throw CompileError("E-entry", "ambiguous entry module (candidates: " + names + "); name one 'toplevel'",
                     p.modules.front().span);
}

}  // namespace

SurfaceProgram parse_program(std::string_view source) {
  Parser parser(lex(source));
  SurfaceProgram p = parser.program();
  p.entry = pick_entry(p);
  return p;
}

}  // namespace timetide
