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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "timetide/ast.hpp"

namespace timetide {

/// Metadata attached to the loop produced from a task.
struct TaskInfo {
  TaskParams params;         // period and offset after pipelining
  std::int64_t prefix = 0;   // one-time sync before the loop
  std::string label;         // body-complete label
  int replica = 0;
  int replicas = 1;
  bool operator==(const TaskInfo&) const = default;
};

enum class KKind {
  kNothing,
  kVarDecl,     // var name
  kAssign,      // name = expr
  kExpr,        // expr
  kSend,        // send target(expr)
  kSync,        // sync amount
  kIf,          // if expr then items[0] else items[1]
  kSeq,         // items in order
  kLoop,        // loop items[0] end
  kAbort,       // abort items[0] when expr : name
  kCheckAbort,  // checkabort(expr, name)
  kComplete,    // body-complete marker for traces
};

struct KNode;
using KTerm = std::shared_ptr<const KNode>;

struct KNode {
  KKind kind = KKind::kNothing;
  std::string name;
  Expr expr;
  Expr target;
  std::int64_t amount = 0;
  std::vector<KTerm> items;
  std::optional<TaskInfo> task;
  bool weak = false;
  bool immediate = false;

  mutable std::uint64_t hash_cache = 0;
  mutable bool hashed = false;
};

namespace k {
KTerm nothing();
KTerm var_decl(std::string name);
KTerm assign(std::string name, Expr value);
KTerm expr(Expr e);
KTerm send(Expr target, Expr value);
KTerm sync(std::int64_t d);
KTerm if_(Expr cond, KTerm then_t, KTerm else_t);
/// Flattens nested sequences and drops `nothing`; a single item is returned as is.
KTerm seq(std::vector<KTerm> items);
KTerm loop(KTerm body, std::optional<TaskInfo> task = std::nullopt);
KTerm abort(Expr cond, std::string label, KTerm body, bool weak = false, bool immediate = false);
KTerm checkabort(Expr cond, std::string label);
KTerm complete(std::string label);
}  // namespace k

/// Stable textual form used by `--emit kernel` and golden tests.
std::string print_term(const KTerm& t, int indent = 0);
std::string print_expr(const Expr& e);
bool same_term(const KTerm& a, const KTerm& b);
std::uint64_t term_hash(const KTerm& t);

/// Total sync amount along every control path, if it is the same on all paths.
std::optional<std::int64_t> sync_total(const KTerm& t);
/// True if every path from entry to exit passes a sync.
bool always_syncs(const KTerm& t);

struct ChannelSpec {
  std::string id;
  std::int64_t delta = 0;
  std::string elem_type;
  std::vector<std::string> writers;
  std::vector<std::string> readers;
  bool merge_writers = false;   // pipeline replicas share one output
  Value initial;                // first initial token; ⊥ if undeclared
  bool sink = false;
  std::string tap_of;           // duplicates every push of this channel
};

struct KThread {
  std::string id;
  KTerm body;
  std::vector<std::string> inbound;
  std::vector<std::string> outbound;
};

struct KernelProgram {
  std::vector<KThread> threads;  // leaves of the parallel tree, left to right
  std::map<std::string, ChannelSpec> channels;

  const KThread* find_thread(const std::string& id) const;
  int thread_index(const std::string& id) const;
};

inline constexpr const char* kKernelHeader = "# timetide-kernel v1";
std::string print_kernel(const KernelProgram& p);

}  // namespace timetide
