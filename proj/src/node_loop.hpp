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

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "timetide/frame.hpp"
#include "timetide/interpreter.hpp"
#include "timetide/lsn.hpp"

namespace timetide::detail {

class Sink {
 public:
  virtual ~Sink() = default;
  virtual bool can_push() const = 0;
  virtual void push(const Value& v) = 0;
  virtual void close() = 0;
};

class QueueSink : public Sink {
 public:
  QueueSink(FrameQueue* q, std::chrono::milliseconds latency) : q_(q), latency_(latency) {}
  bool can_push() const override { return q_->has_space(); }
  void push(const Value& v) override;
  void close() override { q_->close(); }

 private:
  FrameQueue* q_;
  std::chrono::milliseconds latency_;
};

/// Executes the threads and relays placed on one node, one unit tick at a
/// time, never blocking while some local unit can progress.
class NodeLoop {
 public:
  NodeLoop(const ThreadEngine& engine, std::int64_t tick_limit, Notifier* notifier, std::uint64_t seed);

  void add_thread(std::size_t thread, std::map<std::string, std::vector<FrameQueue*>> in,
                  std::map<std::string, std::vector<Sink*>> out);
  void add_relay(FrameQueue* in, Sink* out);

  /// Returns when every unit finished or `stop` is set. Throws RuntimeError
  /// if no unit progressed for `stall_seconds` (when positive).
  void run(const std::atomic<bool>* stop, double stall_seconds = 0.0);

  /// Records grouped by thread in program order, so the result does not
  /// depend on how local units interleaved.
  Trace grouped_trace() const;
  std::map<std::string, std::int64_t> clocks() const;
  std::int64_t progress() const { return progress_.load(); }
  const std::atomic<std::int64_t>& progress_counter() const { return progress_; }
  void set_clock_probe(std::atomic<std::int64_t>* probe) { probe_ = probe; }

 private:
  struct Unit {
    bool relay = false;
    std::size_t thread = 0;
    ThreadState state;
    std::int64_t ran = 0;
    std::int64_t sync_len = 0;
    bool finished = false;
    std::map<std::string, std::vector<FrameQueue*>> in;
    std::map<std::string, std::vector<Sink*>> out;
    FrameQueue* relay_in = nullptr;
    Sink* relay_out = nullptr;
  };

  const ThreadEngine& engine_;
  std::int64_t tick_limit_;
  Notifier* notifier_;
  std::mt19937_64 rng_;
  bool shuffle_;
  std::vector<Unit> units_;
  Trace trace_;
  std::atomic<std::int64_t> progress_{0};
  std::atomic<std::int64_t>* probe_ = nullptr;

  bool try_tick(Unit& u);
  void finish(Unit& u);
  std::chrono::steady_clock::time_point next_deadline() const;
};

using QueueFor = std::function<FrameQueue*(std::size_t lane, std::size_t hop)>;
using SinkFor = std::function<Sink*(std::size_t lane, std::size_t hop)>;

/// Adds the threads and relays of `node` to `loop`. `queue` returns the
/// consumer end of a hop located on this node, `sink` the producer end of a
/// hop fed from this node.
void wire_node(NodeLoop& loop, const DistributedPlan& plan, const std::string& node, const QueueFor& queue,
               const SinkFor& sink);

}  // namespace timetide::detail
