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

#include <string>
#include <vector>

#include "timetide/ast.hpp"
#include "timetide/host.hpp"
#include "timetide/kernel.hpp"

namespace timetide {

/// Inlines every `run` of the entry module recursively. The returned entry
/// module lists every channel of the program under its global id
/// (`orders.0`, `Aggregator[0]/from_leaf.1`) and its body references
/// channels through kChanRef expressions. Inlined bodies are wrapped in
/// kInstance statements named by their instance path.
SurfaceProgram instantiate_modules(const SurfaceProgram& program);

/// `foreach` becomes a sequence and `pareach` a right-nested parallel
/// composition. Loops whose bound is not yet literal are left in place.
Stmt unroll_iterators(const Stmt& s);
SurfaceProgram unroll_iterators(const SurfaceProgram& program);

/// One parallel leaf of an instantiated program.
struct ThreadLeaf {
  std::string id;
  Stmt body;  // includes the enclosing `var` blocks it uses
};

/// Splits the instantiated entry body at `<>` operators in structural
/// position. Reports misplaced `<>` and variables shared across arms.
std::vector<ThreadLeaf> extract_threads(const SurfaceProgram& instantiated, std::vector<Diagnostic>& diags);

/// Kernel translation of one task. `inputs` lists channels latched at release.
KTerm lower_task(const TaskParams& params, const KTerm& body, const std::vector<std::string>& inputs,
                 const std::string& label = "");

/// Replica parameters for a task whose duration exceeds its period.
std::vector<TaskParams> pipeline_params(const TaskParams& params);
/// Lowered replicas, one term per parallel thread.
std::vector<KTerm> pipeline_task(const TaskParams& params, const KTerm& body,
                                 const std::vector<std::string>& inputs, const std::string& label = "");

KTerm insert_checkaborts(const KTerm& term);

/// Channels read (value or freshness) and written by a kernel term.
std::vector<std::string> channels_read(const KTerm& t);
std::vector<std::string> channels_written(const KTerm& t);

struct KernelOptions {
  /// Enforces one writer and one reader per channel.
  bool check_endpoints = true;
  /// Calls are checked against this table; the standard table when null.
  const HostTable* host = nullptr;
  /// Receives warnings such as W-offset when set.
  std::vector<Diagnostic>* warnings = nullptr;
};

/// Full lowering of a constant-resolved program.
KernelProgram to_kernel(const SurfaceProgram& resolved, const KernelOptions& options = {});

std::int64_t lcm64(std::int64_t a, std::int64_t b);

}  // namespace timetide
