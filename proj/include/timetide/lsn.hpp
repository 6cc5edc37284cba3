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
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "timetide/diagnostics.hpp"
#include "timetide/frame.hpp"
#include "timetide/runtime.hpp"

namespace timetide {

struct LsnEdge {
  std::string from;
  std::string to;
  std::int64_t lambda = 0;
};

struct LsnTopology {
  std::vector<std::string> nodes;
  std::vector<LsnEdge> edges;

  /// `{"nodes":[..],"edges":[{"from":..,"to":..,"lambda":n}]}`. Rejects
  /// self-loops, unknown nodes and negative λ.
  static LsnTopology from_json(const nlohmann::json& j);
  /// One node, no edges.
  static LsnTopology single(const std::string& node);
};

using Mapping = std::map<std::string, std::string>;  // thread id → node
Mapping mapping_from_json(const nlohmann::json& j);

struct Route {
  std::vector<std::string> nodes;   // from sender node to receiver node
  std::vector<std::int64_t> lambdas;  // one per link
  std::int64_t total = 0;
};
/// Least-delay path; a zero-length route when `from == to`.
std::optional<Route> shortest_route(const LsnTopology& lsn, const std::string& from, const std::string& to);

/// One diagnostic per unmapped thread, unknown node, unroutable channel or
/// channel whose path delay exceeds its δ.
std::vector<Diagnostic> check_mapping(const Mapping& gamma, const KernelProgram& program, const LsnTopology& lsn);

/// A FIFO segment of a lane. Segment i connects route node i to node i+1;
/// a co-located lane has one segment inside a single node.
struct HopPlan {
  std::string key;
  std::string producer_node;
  std::string consumer_node;
  std::deque<Value> tokens;
  bool remote = false;
};

struct LanePlan {
  LaneInfo lane;
  std::vector<HopPlan> hops;
};

struct DistributedPlan {
  std::vector<std::string> nodes;
  std::vector<LanePlan> lanes;
  std::map<std::string, std::vector<std::size_t>> node_threads;
};

DistributedPlan plan_distribution(const KernelProgram& program, const LsnTopology& lsn, const Mapping& gamma,
                                  std::int64_t tick_limit);

enum class Transport { kInProcess, kSocket };

struct SimOptions {
  Transport transport = Transport::kInProcess;
  std::int64_t latency_ms = 0;  // added to every inter-node frame
  bool ffp = false;             // bounded queues with blocking writes
  std::uint64_t seed = 0;
  const HostTable* host = nullptr;
  double watchdog_seconds = 60.0;
};

struct SimResult {
  std::map<std::string, Trace> node_traces;
  Trace merged;  // node traces concatenated; each thread's order is preserved
  std::map<std::string, std::int64_t> clocks;
  double wall_seconds = 0.0;
};

SimResult simulate_distributed(const KernelProgram& program, const LsnTopology& lsn, const Mapping& gamma,
                               std::int64_t tick_limit, const SimOptions& options = {});

struct EquivalenceReport {
  bool equal = false;
  std::string divergence;  // first per-thread difference, empty when equal
  RunResult central;
  SimResult distributed;
};

/// Runs the program centrally (round-robin) and distributed, then compares
/// per-thread trace projections byte for byte.
EquivalenceReport check_equivalence(const KernelProgram& program, const LsnTopology& lsn, const Mapping& gamma,
                                    std::int64_t tick_limit, const SimOptions& options = {});

/// Runs one thread against explicit queues: per sync tick it pops one frame
/// from every inbound queue (blocking), then pushes one frame per outbound
/// queue. `progress` receives the thread clock after every tick.
Trace run_node(const KernelProgram& program, std::size_t thread,
               const std::map<std::string, std::vector<FrameQueue*>>& inbound,
               const std::map<std::string, std::vector<FrameQueue*>>& outbound, std::int64_t tick_limit,
               std::atomic<std::int64_t>* progress = nullptr, const std::atomic<bool>* stop = nullptr,
               const HostTable* host = nullptr);

}  // namespace timetide
