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
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "timetide/host.hpp"
#include "timetide/kernel.hpp"

namespace timetide {

class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceRecord {
  enum class Kind { kPush, kPop, kComplete };
  std::string thread;
  std::int64_t theta = 0;
  Kind kind = Kind::kPush;
  std::string chan;  // empty for kComplete
  Value value;

  bool operator==(const TraceRecord&) const = default;
};
using Trace = std::vector<TraceRecord>;

nlohmann::ordered_json trace_record_json(const TraceRecord& r);
TraceRecord trace_record_from_json(const nlohmann::json& j);
std::string trace_to_jsonl(const Trace& t);
Trace trace_from_jsonl(const std::string& text);
/// Records of one thread, in the order that thread produced them.
Trace project(const Trace& t, const std::string& thread);
std::map<std::string, Trace> projections(const Trace& t);

struct InCell {
  Value last;
  bool fresh = false;
  bool operator==(const InCell&) const = default;
};

/// Local state of one thread: residual term, clock and stores.
struct ThreadState {
  KTerm residual;
  std::int64_t theta = 0;
  bool terminated = false;
  std::map<std::string, Value> vars;
  std::map<std::string, InCell> in;
  std::map<std::string, Value> buff;  // keyed by the written channel
};

/// Channel endpoint used by one unit tick.
class TickIO {
 public:
  virtual ~TickIO() = default;
  virtual Value pop(const std::string& chan) = 0;
  virtual void push(const std::string& chan, const Value& v) = 0;
};

/// Executes one thread. Stateless apart from the program it points at.
class ThreadEngine {
 public:
  ThreadEngine(const KernelProgram& program, const HostTable& host, std::int64_t step_budget = 1'000'000);

  ThreadState initial(std::size_t thread) const;

  /// Applies one instantaneous rewrite. Returns false when the residual is
  /// `nothing` or its leftmost action is a sync.
  bool step(std::size_t thread, ThreadState& s, Trace* trace) const;
  /// Steps until the residual is `nothing` or starts with a sync.
  void settle(std::size_t thread, ThreadState& s, Trace* trace) const;

  /// Amount of the leading sync of a settled residual.
  static std::optional<std::int64_t> pending_sync(const ThreadState& s);
  static bool finished(const ThreadState& s, std::int64_t tick_limit);
  /// min(d, tick_limit - θ) for the pending sync.
  static std::int64_t effective_sync(const ThreadState& s, std::int64_t tick_limit);

  /// One unit tick: pop every inbound channel, push every outbound buffer.
  void unit_tick(std::size_t thread, ThreadState& s, TickIO& io, Trace* trace) const;
  /// Removes the leading sync from the residual.
  static void consume_sync(ThreadState& s);

  /// Ends a sync after `ran` unit ticks (fewer than its amount only at the
  /// tick limit), then settles unless the limit was reached.
  void finish_sync(std::size_t thread, ThreadState& s, std::int64_t ran, std::int64_t tick_limit,
                   Trace* trace) const;

  /// Full reaction: the pending sync's unit ticks, then settle.
  void react(std::size_t thread, ThreadState& s, TickIO& io, std::int64_t tick_limit, Trace* trace) const;

  Value eval(std::size_t thread, ThreadState& s, const Expr& e) const;

  const KernelProgram& program() const { return program_; }
  const HostTable& host() const { return host_; }

 private:
  const KernelProgram& program_;
  const HostTable& host_;
  std::int64_t step_budget_;
  std::map<std::string, std::string> tap_source_;

  KTerm rewrite(std::size_t thread, ThreadState& s, const KTerm& t, Trace* trace, bool& stepped) const;
  std::string send_channel(std::size_t thread, ThreadState& s, const Expr& target) const;
  Value read_channel(ThreadState& s, const std::string& id) const;
};

/// Canonical byte string of a thread state, used for hashing and equality.
void serialize_state(const ThreadState& s, std::vector<std::uint8_t>& out);

}  // namespace timetide
