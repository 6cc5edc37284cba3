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
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "timetide/interpreter.hpp"

namespace timetide {

/// One FIFO between a writer and a reader. Replicas of a pipelined task get
/// one lane each; other multi-writer channels share a lane per reader.
struct LaneInfo {
  std::string chan;
  std::vector<int> writers;  // thread indices
  int reader = -1;
  std::int64_t delta = 0;
  std::vector<Value> tokens;  // initial contents
};

/// δ initial tokens: the declared initial value first, then ⊥.
std::vector<Value> initial_tokens(std::int64_t delta, const Value& initial);

struct Configuration {
  std::vector<ThreadState> threads;
  std::vector<std::deque<Value>> lanes;
};

/// Checks q_in(m) = q_out(m − δ) on every single-writer lane and the
/// occupancy law after every reaction.
class LaneMonitor {
 public:
  explicit LaneMonitor(const std::vector<LaneInfo>& lanes);
  void on_push(std::size_t lane, const Value& v);
  void on_pop(std::size_t lane, const Value& v);
  void check_occupancy(const Configuration& c);
  const std::vector<std::string>& violations() const { return violations_; }
  std::int64_t checked_pops() const { return checked_pops_; }

 private:
  const std::vector<LaneInfo>& lanes_;
  std::vector<std::vector<Value>> pushed_;
  std::vector<std::int64_t> popped_;
  std::vector<std::string> violations_;
  std::int64_t checked_pops_ = 0;
  void report(std::string msg);
};

class CentralRuntime {
 public:
  CentralRuntime(const KernelProgram& program, std::int64_t tick_limit, const HostTable* host = nullptr);

  Configuration initial(Trace* trace) const;
  bool done(const Configuration& c) const;
  bool enabled(const Configuration& c, std::size_t thread) const;
  std::vector<std::size_t> enabled_threads(const Configuration& c) const;
  /// Pre: enabled(c, thread).
  void react(Configuration& c, std::size_t thread, Trace* trace, LaneMonitor* monitor = nullptr) const;

  std::string describe(const Configuration& c) const;
  void serialize(const Configuration& c, std::vector<std::uint8_t>& out) const;

  const std::vector<LaneInfo>& lanes() const { return lanes_; }
  const KernelProgram& program() const { return program_; }
  const ThreadEngine& engine() const { return engine_; }
  std::int64_t tick_limit() const { return tick_limit_; }

 private:
  const KernelProgram& program_;
  ThreadEngine engine_;
  std::int64_t tick_limit_;
  std::vector<LaneInfo> lanes_;
  std::vector<std::map<std::string, std::vector<std::size_t>>> in_lanes_;
  std::vector<std::map<std::string, std::vector<std::size_t>>> out_lanes_;

  friend class CentralIO;
};

struct Schedule {
  enum class Policy { kRoundRobin, kRandom, kGreedy, kReplay };
  Policy policy = Policy::kRoundRobin;
  std::uint64_t seed = 0;
  std::vector<std::string> priority;                          // greedy
  std::vector<std::pair<std::string, std::int64_t>> replay;   // (thread, θ after)

  static Schedule round_robin();
  static Schedule random(std::uint64_t seed);
  static Schedule greedy(std::vector<std::string> priority);
  static Schedule replay_of(std::vector<std::pair<std::string, std::int64_t>> order);
  std::string describe() const;
};

struct RunOptions {
  const HostTable* host = nullptr;
  bool monitor = false;
};

struct RunResult {
  Trace trace;
  std::vector<std::string> violations;  // monitor findings
  std::int64_t reactions = 0;
  std::vector<std::pair<std::string, std::int64_t>> order;
  std::vector<std::int64_t> clocks;
};

/// Runs reactions chosen by `schedule` until every thread reached the limit
/// or terminated. Throws RuntimeError on deadlock or evaluation errors.
RunResult run_centralised(const KernelProgram& program, const Schedule& schedule, std::int64_t tick_limit,
                          const RunOptions& options = {});

/// Scripted environment input: value pushed on `channel` at env tick `tick`.
struct Stimulus {
  std::int64_t tick = 0;
  std::string channel;
  Value value;
};
std::vector<Stimulus> parse_stimulus(const std::string& jsonl);
/// Adds a thread `env` that writes the stimulus onto unwritten channels.
void attach_stimulus(KernelProgram& program, const std::vector<Stimulus>& stimulus);

}  // namespace timetide
