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

#include "timetide/lsn.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <memory>
#include <queue>
#include <set>
#include <thread>

#include "node_loop.hpp"
#include "timetide/host.hpp"
#include "timetide/verify.hpp"

namespace timetide {

namespace detail {
SimResult simulate_over_sockets(const KernelProgram& program, const DistributedPlan& plan, std::int64_t tick_limit,
                                const SimOptions& options);
}

LsnTopology LsnTopology::from_json(const nlohmann::json& j) {
  LsnTopology lsn;
  std::set<std::string> known;
  for (const auto& n : j.at("nodes")) {
    const auto name = n.get<std::string>();
    if (!known.insert(name).second) throw std::invalid_argument("duplicate node " + name);
    lsn.nodes.push_back(name);
  }
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      LsnEdge edge{e.at("from").get<std::string>(), e.at("to").get<std::string>(), e.at("lambda").get<std::int64_t>()};
      if (!known.count(edge.from) || !known.count(edge.to))
        throw std::invalid_argument("edge " + edge.from + "->" + edge.to + " names an unknown node");
      if (edge.from == edge.to) throw std::invalid_argument("self-loop on node " + edge.from);
      if (edge.lambda < 0) throw std::invalid_argument("negative lambda on " + edge.from + "->" + edge.to);
      lsn.edges.push_back(std::move(edge));
    }
  }
  return lsn;
}

LsnTopology LsnTopology::single(const std::string& node) {
  LsnTopology lsn;
  lsn.nodes.push_back(node);
  return lsn;
}

Mapping mapping_from_json(const nlohmann::json& j) {
  Mapping m;
  for (const auto& [k, v] : j.items()) m[k] = v.get<std::string>();
  return m;
}

std::optional<Route> shortest_route(const LsnTopology& lsn, const std::string& from, const std::string& to) {
  if (std::find(lsn.nodes.begin(), lsn.nodes.end(), from) == lsn.nodes.end() ||
      std::find(lsn.nodes.begin(), lsn.nodes.end(), to) == lsn.nodes.end())
    return std::nullopt;
  if (from == to) return Route{{from}, {}, 0};
  constexpr auto kInf = std::numeric_limits<std::int64_t>::max();
  std::map<std::string, std::int64_t> dist;
  std::map<std::string, const LsnEdge*> via;
  for (const auto& n : lsn.nodes) dist[n] = kInf;
  dist[from] = 0;
  using Item = std::pair<std::int64_t, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  pq.emplace(0, from);
  while (!pq.empty()) {
    auto [d, n] = pq.top();
    pq.pop();
    if (d > dist[n]) continue;
    for (const auto& e : lsn.edges) {
      if (e.from != n || d + e.lambda >= dist[e.to]) continue;
      dist[e.to] = d + e.lambda;
      via[e.to] = &e;
      pq.emplace(dist[e.to], e.to);
    }
  }
  if (dist[to] == kInf) return std::nullopt;
  Route r;
  r.total = dist[to];
  for (std::string n = to; n != from; n = via[n]->from) {
    r.nodes.push_back(n);
    r.lambdas.push_back(via[n]->lambda);
  }
  r.nodes.push_back(from);
  std::reverse(r.nodes.begin(), r.nodes.end());
  std::reverse(r.lambdas.begin(), r.lambdas.end());
  return r;
}

namespace {

struct Edge {
  std::string chan;
  std::size_t writer;
  std::size_t reader;
};

std::vector<Edge> channel_edges(const KernelProgram& program) {
  std::vector<Edge> out;
  for (const auto& [id, spec] : program.channels) {
    for (std::size_t w = 0; w < program.threads.size(); ++w) {
      const auto& wo = program.threads[w].outbound;
      if (std::find(wo.begin(), wo.end(), id) == wo.end()) continue;
      for (std::size_t r = 0; r < program.threads.size(); ++r) {
        const auto& ri = program.threads[r].inbound;
        if (std::find(ri.begin(), ri.end(), id) != ri.end()) out.push_back({id, w, r});
      }
    }
  }
  return out;
}

Diagnostic error(std::string code, std::string msg) {
  Diagnostic d;
  d.code = std::move(code);
  d.message = std::move(msg);
  return d;
}

}  // namespace

std::vector<Diagnostic> check_mapping(const Mapping& gamma, const KernelProgram& program, const LsnTopology& lsn) {
  std::vector<Diagnostic> out;
  bool complete = true;
  for (const auto& t : program.threads) {
    auto it = gamma.find(t.id);
    if (it == gamma.end()) {
      out.push_back(error("E-unmapped-thread", "thread " + t.id + " is not mapped to a node"));
      complete = false;
    } else if (std::find(lsn.nodes.begin(), lsn.nodes.end(), it->second) == lsn.nodes.end()) {
      out.push_back(error("E-unknown-node", "thread " + t.id + " is mapped to unknown node " + it->second));
      complete = false;
    }
  }
  for (const auto& [id, _] : gamma)
    if (!program.find_thread(id)) out.push_back(error("E-unknown-thread", "mapping names unknown thread " + id));
  if (!complete) return out;
  for (const auto& e : channel_edges(program)) {
    const auto& w = program.threads[e.writer].id;
    const auto& r = program.threads[e.reader].id;
    const auto delta = program.channels.at(e.chan).delta;
    auto route = shortest_route(lsn, gamma.at(w), gamma.at(r));
    if (!route) {
      out.push_back(error("E-no-route", "channel " + e.chan + " (" + w + " -> " + r + "): no path from " +
                                            gamma.at(w) + " to " + gamma.at(r)));
      continue;
    }
    if (route->total > delta)
      out.push_back(error("E-delay-deficit", "channel " + e.chan + " (" + w + " -> " + r + "): path delay " +
                                                 std::to_string(route->total) + " exceeds delay " +
                                                 std::to_string(delta) + " by " +
                                                 std::to_string(route->total - delta)));
  }
  return out;
}

DistributedPlan plan_distribution(const KernelProgram& program, const LsnTopology& lsn, const Mapping& gamma,
                                  std::int64_t tick_limit) {
  auto diags = check_mapping(gamma, program, lsn);
  if (has_errors(diags)) throw CompileError(std::move(diags));
  DistributedPlan plan;
  plan.nodes = lsn.nodes;
  for (std::size_t t = 0; t < program.threads.size(); ++t) plan.node_threads[gamma.at(program.threads[t].id)].push_back(t);
  CentralRuntime central(program, tick_limit);
  for (std::size_t l = 0; l < central.lanes().size(); ++l) {
    const LaneInfo& lane = central.lanes()[l];
    if (lane.writers.size() > 1)
      throw RuntimeError("channel " + lane.chan + " has " + std::to_string(lane.writers.size()) +
                         " unmerged writers; it cannot be distributed");
    LanePlan lp;
    lp.lane = lane;
    const std::string reader_node = gamma.at(program.threads[static_cast<std::size_t>(lane.reader)].id);
    const std::string key_base = lane.chan + "@" + program.threads[static_cast<std::size_t>(lane.reader)].id + "#" +
                                 std::to_string(l);
    std::deque<Value> tokens(lane.tokens.begin(), lane.tokens.end());
    Route route{{reader_node}, {}, 0};
    if (!lane.writers.empty()) {
      const std::string writer_node = gamma.at(program.threads[static_cast<std::size_t>(lane.writers[0])].id);
      route = *shortest_route(lsn, writer_node, reader_node);
    }
    if (route.nodes.size() == 1) {
      lp.hops.push_back({key_base, reader_node, reader_node, std::move(tokens), false});
    } else {
      const std::size_t links = route.lambdas.size();
      lp.hops.resize(links);
      // The reader drains the last hop first, so it owns the earliest tokens,
      // including the residual δ − Λ.
      const std::int64_t residual = lane.delta - route.total;
      for (std::size_t i = links; i-- > 0;) {
        HopPlan& hop = lp.hops[i];
        hop.key = key_base + "/" + std::to_string(i);
        hop.producer_node = route.nodes[i];
        hop.consumer_node = route.nodes[i + 1];
        hop.remote = true;
        std::int64_t n = route.lambdas[i] + (i + 1 == links ? residual : 0);
        for (; n > 0 && !tokens.empty(); --n) {
          hop.tokens.push_back(std::move(tokens.front()));
          tokens.pop_front();
        }
      }
    }
    plan.lanes.push_back(std::move(lp));
  }
  return plan;
}

namespace {

std::size_t hop_capacity(const HopPlan& hop) { return hop.tokens.size() + 4; }

SimResult simulate_in_process(const KernelProgram& program, const DistributedPlan& plan, std::int64_t tick_limit,
                              const SimOptions& options) {
  const HostTable& host = options.host ? *options.host : HostTable::standard();
  ThreadEngine engine(program, host);
  std::map<std::string, std::unique_ptr<Notifier>> notifiers;
  for (const auto& n : plan.nodes) notifiers[n] = std::make_unique<Notifier>();

  std::vector<std::vector<std::unique_ptr<FrameQueue>>> queues(plan.lanes.size());
  std::vector<std::vector<std::unique_ptr<detail::QueueSink>>> sinks(plan.lanes.size());
  for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
    for (const auto& hop : plan.lanes[l].hops) {
      auto q = std::make_unique<FrameQueue>(options.ffp ? std::optional<std::size_t>(hop_capacity(hop))
                                                         : std::nullopt);
      q->fill(hop.tokens);
      q->set_consumer(notifiers.at(hop.consumer_node).get());
      q->set_producer(notifiers.at(hop.producer_node).get());
      const auto latency = std::chrono::milliseconds(hop.remote ? options.latency_ms : 0);
      sinks[l].push_back(std::make_unique<detail::QueueSink>(q.get(), latency));
      queues[l].push_back(std::move(q));
    }
  }

  std::vector<std::unique_ptr<detail::NodeLoop>> loops;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const auto& n = plan.nodes[i];
    loops.push_back(std::make_unique<detail::NodeLoop>(engine, tick_limit, notifiers.at(n).get(),
                                                       options.seed ? options.seed + i : 0));
    detail::wire_node(
        *loops.back(), plan, n, [&](std::size_t l, std::size_t h) { return queues[l][h].get(); },
        [&](std::size_t l, std::size_t h) { return sinks[l][h].get(); });
  }

  std::atomic<bool> stop{false};
  std::vector<std::string> errors(plan.nodes.size());
  std::atomic<std::size_t> running{plan.nodes.size()};
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        loops[i]->run(&stop);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        stop = true;
        for (auto& [_, nt] : notifiers) nt->notify();
      }
      --running;
    });
  }

  std::vector<std::int64_t> last(plan.nodes.size(), -1);
  auto last_change = std::chrono::steady_clock::now();
  bool stalled = false;
  while (running.load() > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    bool changed = false;
    for (std::size_t i = 0; i < loops.size(); ++i) {
      const auto p = loops[i]->progress();
      if (p != last[i]) changed = true;
      last[i] = p;
    }
    const auto now = std::chrono::steady_clock::now();
    if (changed) last_change = now;
    if (options.watchdog_seconds > 0 &&
        std::chrono::duration<double>(now - last_change).count() > options.watchdog_seconds) {
      stalled = true;
      stop = true;
      for (auto& [_, nt] : notifiers) nt->notify();
      break;
    }
  }
  for (auto& w : workers) w.join();

  SimResult result;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string failure;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    for (const auto& [t, theta] : loops[i]->clocks()) result.clocks[t] = theta;
    if (!errors[i].empty()) failure += "node " + plan.nodes[i] + ": " + errors[i] + "\n";
  }
  if (stalled || !failure.empty()) {
    std::string report = stalled ? "distributed run made no progress for " +
                                       std::to_string(options.watchdog_seconds) + "s\n"
                                 : std::string();
    report += failure;
    for (std::size_t i = 0; i < loops.size(); ++i) {
      report += "node " + plan.nodes[i] + ":";
      for (const auto& [t, theta] : loops[i]->clocks()) report += " " + t + "=" + std::to_string(theta);
      report += "\n";
    }
    throw RuntimeError(report);
  }
  for (std::size_t i = 0; i < loops.size(); ++i) {
    Trace t = loops[i]->grouped_trace();
    result.merged.insert(result.merged.end(), t.begin(), t.end());
    result.node_traces[plan.nodes[i]] = std::move(t);
  }
  return result;
}

}  // namespace

SimResult simulate_distributed(const KernelProgram& program, const LsnTopology& lsn, const Mapping& gamma,
                               std::int64_t tick_limit, const SimOptions& options) {
  const DistributedPlan plan = plan_distribution(program, lsn, gamma, tick_limit);
  if (options.transport == Transport::kSocket) return detail::simulate_over_sockets(program, plan, tick_limit, options);
  return simulate_in_process(program, plan, tick_limit, options);
}

EquivalenceReport check_equivalence(const KernelProgram& program, const LsnTopology& lsn, const Mapping& gamma,
                                    std::int64_t tick_limit, const SimOptions& options) {
  EquivalenceReport r;
  RunOptions ro;
  ro.host = options.host;
  r.central = run_centralised(program, Schedule::round_robin(), tick_limit, ro);
  r.distributed = simulate_distributed(program, lsn, gamma, tick_limit, options);
  r.divergence = first_divergence(r.central.trace, r.distributed.merged);
  r.equal = r.divergence.empty();
  return r;
}

Trace run_node(const KernelProgram& program, std::size_t thread,
               const std::map<std::string, std::vector<FrameQueue*>>& inbound,
               const std::map<std::string, std::vector<FrameQueue*>>& outbound, std::int64_t tick_limit,
               std::atomic<std::int64_t>* progress, const std::atomic<bool>* stop, const HostTable* host) {
  ThreadEngine engine(program, host ? *host : HostTable::standard());
  Notifier notifier;
  std::vector<std::unique_ptr<detail::QueueSink>> sinks;
  std::map<std::string, std::vector<detail::Sink*>> out;
  for (const auto& [chan, qs] : outbound) {
    for (FrameQueue* q : qs) {
      q->set_producer(&notifier);
      sinks.push_back(std::make_unique<detail::QueueSink>(q, std::chrono::milliseconds(0)));
      out[chan].push_back(sinks.back().get());
    }
  }
  for (const auto& [_, qs] : inbound)
    for (FrameQueue* q : qs) q->set_consumer(&notifier);
  detail::NodeLoop loop(engine, tick_limit, &notifier, 0);
  loop.set_clock_probe(progress);
  loop.add_thread(thread, inbound, std::move(out));
  loop.run(stop);
  for (const auto& [_, qs] : inbound)
    for (FrameQueue* q : qs) q->set_consumer(nullptr);
  for (const auto& [_, qs] : outbound)
    for (FrameQueue* q : qs) q->set_producer(nullptr);
  return loop.grouped_trace();
}

}  // namespace timetide
