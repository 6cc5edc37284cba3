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
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "timetide/ast.hpp"
#include "timetide/runtime.hpp"

namespace timetide {

enum class VerdictStatus { kPass, kFail, kInconclusive };
const char* status_name(VerdictStatus s);

struct Verdict {
  VerdictStatus status = VerdictStatus::kPass;
  std::int64_t bound = 0;
  std::string message;
  std::string schedule;  // how to reproduce the counterexample
  std::vector<std::pair<std::string, std::int64_t>> order;  // (thread, θ after)
  Trace counterexample;
  std::int64_t states = 0;
  std::int64_t runs = 0;

  nlohmann::ordered_json to_json() const;
};

struct ObserverBinding {
  std::string observer;                                       // module name
  std::vector<std::pair<std::string, std::string>> bindings;  // observer port, program channel
  std::string violation;                                      // observer output port
};

/// Adds the observer modules and one extra `<>` arm running `binding.observer`.
/// Each bound channel is tapped into a fresh channel with the same delay.
SurfaceProgram compose_observer(const SurfaceProgram& program, const SurfaceProgram& observers,
                                const ObserverBinding& binding);

struct Hyperperiod {
  std::int64_t h = 1;
  std::int64_t prelude = 0;
  bool periodic = true;
};
Hyperperiod hyperperiod(const KernelProgram& program);

struct DeterminismOptions {
  std::int64_t runs = 100;
  std::uint64_t seed = 1;
  const HostTable* host = nullptr;
};
/// Round-robin, two greedy orders, then seeded-random schedules.
std::vector<Schedule> determinism_schedules(const KernelProgram& program, std::int64_t runs, std::uint64_t seed);
Verdict check_determinism(const KernelProgram& program, std::int64_t tick_limit, const DeterminismOptions& options = {});

struct SafetyOptions {
  std::int64_t bound = 0;  // 0 selects prelude + hyperperiod
  std::int64_t max_states = 4'000'000;
  const HostTable* host = nullptr;
};
/// Explores every reaction interleaving up to the bound. FAIL when some
/// reachable reaction pushes `true` on `violation_channel`.
Verdict check_safety(const KernelProgram& program, const std::string& violation_channel,
                     const SafetyOptions& options = {});

/// Per-thread JSONL projections, used for byte-level trace comparison.
std::map<std::string, std::string> projection_text(const Trace& t);
/// Empty when equal; otherwise a description of the first difference.
std::string first_divergence(const Trace& a, const Trace& b);

}  // namespace timetide
