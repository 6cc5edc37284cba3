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

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "timetide/diagnostics.hpp"
#include "timetide/value.hpp"

namespace timetide {

enum class ExprKind {
  kLiteral,
  kIdent,    // variable, constant or channel endpoint (before instantiation)
  kChanRef,  // resolved channel endpoint(s); produced by instantiation
  kFresh,    // fresh(ch)
  kIndex,    // args[0][args[1]]
  kUnary,    // op args[0]
  kBinary,   // args[0] op args[1]
  kCall,     // host function `name`(args...)
};

struct Expr {
  ExprKind kind = ExprKind::kLiteral;
  SourceSpan span;
  Value literal;
  std::string name;  // identifier, callee or operator
  std::vector<std::string> channels;  // kChanRef: element ids
  bool channel_array = false;         // kChanRef: refers to the whole array
  std::vector<Expr> args;

  static Expr lit(Value v, SourceSpan s = {});
  static Expr ident(std::string n, SourceSpan s = {});
  static Expr chan(std::string id, SourceSpan s = {});
  static Expr chan_array(std::vector<std::string> ids, SourceSpan s = {});
  static Expr unary(std::string op, Expr a, SourceSpan s = {});
  static Expr binary(std::string op, Expr a, Expr b, SourceSpan s = {});
  static Expr call(std::string f, std::vector<Expr> args, SourceSpan s = {});
  static Expr fresh(Expr ch, SourceSpan s = {});
  static Expr index(Expr base, Expr idx, SourceSpan s = {});
};

struct TypeRef {
  std::string name;
  std::optional<Expr> array_size;
};

enum class PortDirection { kInput, kOutput };

struct PortDecl {
  std::string name;
  PortDirection direction = PortDirection::kInput;
  bool is_const = false;
  TypeRef type;
  std::optional<Expr> initial;
  SourceSpan span;
};

struct ChannelDecl {
  std::string name;
  TypeRef type;
  Expr delay;
  std::optional<Expr> initial;
  SourceSpan span;
  // Set by observer composition, never by the parser.
  bool sink = false;        // written but never read inside the program
  std::string tap_of;       // copy of every push made on this channel
};

struct ConstDecl {
  std::string name;
  TypeRef type;
  Expr value;
  SourceSpan span;
};

struct TaskParams {
  std::int64_t period = 1;
  std::int64_t duration = 1;
  std::int64_t offset = 0;
  bool operator==(const TaskParams&) const = default;
};

enum class StmtKind {
  kNothing,
  kBlock,     // children in sequence
  kPar,       // children[0] <> children[1]
  kRun,       // run name(bindings)
  kForeach,   // foreach name in exprs[0] { children[0] }
  kPareach,   // pareach name in exprs[0] { children[0] }
  kVar,       // var name : type [= exprs[0]] in children[0] end
  kChanBlock, // chan channels in children[0] end
  kTask,      // task(params) children[0] end
  kAbort,     // [weak] abort children[0] when [immediate] exprs[0]
  kAssign,    // name = exprs[0]
  kIf,        // if exprs[0] children[0] else children[1]
  kExpr,      // exprs[0]
  kSend,      // send exprs[0](exprs[1])
  kInstance,  // inlined module body: name is the instance path
};

struct Binding {
  std::string port;  // empty for positional
  Expr actual;
  SourceSpan span;
};

struct Stmt {
  StmtKind kind = StmtKind::kNothing;
  SourceSpan span;
  std::string name;
  TypeRef type;
  std::vector<Expr> exprs;
  std::vector<Stmt> children;
  std::vector<Binding> bindings;
  std::vector<ChannelDecl> channels;
  // Task parameters stay expressions until constants are resolved.
  std::vector<std::pair<std::string, Expr>> task_args;
  bool weak = false;
  bool immediate = false;

  static Stmt nothing(SourceSpan s = {});
  static Stmt block(std::vector<Stmt> items, SourceSpan s = {});
  static Stmt par(Stmt left, Stmt right, SourceSpan s = {});
};

struct ModuleDecl {
  std::string name;
  std::vector<PortDecl> ports;
  std::vector<ConstDecl> consts;
  std::vector<ChannelDecl> channels;
  Stmt body;
  SourceSpan span;

  const PortDecl* find_port(const std::string& n) const;
};

struct SurfaceProgram {
  std::vector<ModuleDecl> modules;
  std::string entry;

  const ModuleDecl* find_module(const std::string& n) const;
  ModuleDecl* find_module(const std::string& n);
  const ModuleDecl& entry_module() const;
};

/// Reads task(period=..,duration=..,offset=..) arguments once they are literal.
TaskParams task_params(const Stmt& task);

/// Structural equality that ignores source spans.
bool same_ast(const SurfaceProgram& a, const SurfaceProgram& b);

/// Replaces free identifiers with copies of `env` entries. Names bound by
/// `var` blocks and iterators shadow the environment inside their scope.
void substitute_idents(Expr& e, const std::map<std::string, Expr>& env);
void substitute_idents(Stmt& s, const std::map<std::string, Expr>& env);

/// Folds literal arithmetic and literal indexing into channel arrays.
/// Throws CompileError on out-of-range literal indices.
void fold_expr(Expr& e);
void fold_stmt(Stmt& s);

/// Visits every expression in a statement tree, including declarations.
void for_each_expr(Stmt& s, const std::function<void(Expr&)>& fn);
void for_each_expr(const Stmt& s, const std::function<void(const Expr&)>& fn);

}  // namespace timetide
