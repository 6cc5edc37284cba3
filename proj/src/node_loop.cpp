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

#include "node_loop.hpp"

#include <algorithm>
#include <numeric>

namespace timetide::detail {

using Clock = std::chrono::steady_clock;

void QueueSink::push(const Value& v) {
  if (latency_.count() > 0) q_->push(v, Clock::now() + latency_);
  else q_->push(v);
}

namespace {

class UnitIO : public TickIO {
 public:
  UnitIO(const std::map<std::string, std::vector<FrameQueue*>>& in, const std::map<std::string, std::vector<Sink*>>& out,
         const std::string& thread)
      : in_(in), out_(out), thread_(thread) {}

  Value pop(const std::string& chan) override {
    const auto now = Clock::now();
    Value out;
    int non_empty = 0;
    for (FrameQueue* q : in_.at(chan)) {
      auto v = q->try_pop(now);
      if (!v) throw RuntimeError("thread " + thread_ + ": frame on " + chan + " vanished");
      if (!v->is_empty()) {
        ++non_empty;
        out = std::move(*v);
      }
    }
    if (non_empty > 1)
      throw RuntimeError("pipeline replicas pushed " + std::to_string(non_empty) + " values on " + chan +
                         " in one tick");
    return out;
  }

  void push(const std::string& chan, const Value& v) override {
    auto it = out_.find(chan);
    if (it == out_.end()) return;
    for (Sink* s : it->second) s->push(v);
  }

 private:
  const std::map<std::string, std::vector<FrameQueue*>>& in_;
  const std::map<std::string, std::vector<Sink*>>& out_;
  const std::string& thread_;
};

}  // namespace

NodeLoop::NodeLoop(const ThreadEngine& engine, std::int64_t tick_limit, Notifier* notifier, std::uint64_t seed)
    : engine_(engine), tick_limit_(tick_limit), notifier_(notifier), rng_(seed), shuffle_(seed != 0) {}

void NodeLoop::add_thread(std::size_t thread, std::map<std::string, std::vector<FrameQueue*>> in,
                          std::map<std::string, std::vector<Sink*>> out) {
  Unit u;
  u.thread = thread;
  u.state = engine_.initial(thread);
  u.in = std::move(in);
  u.out = std::move(out);
  if (tick_limit_ > 0) engine_.settle(thread, u.state, &trace_);
  units_.push_back(std::move(u));
  if (ThreadEngine::finished(units_.back().state, tick_limit_)) finish(units_.back());
}

void NodeLoop::add_relay(FrameQueue* in, Sink* out) {
  Unit u;
  u.relay = true;
  u.relay_in = in;
  u.relay_out = out;
  units_.push_back(std::move(u));
}

void NodeLoop::finish(Unit& u) {
  u.finished = true;
  if (u.relay) {
    u.relay_out->close();
    return;
  }
  for (auto& [_, sinks] : u.out)
    for (Sink* s : sinks) s->close();
}

bool NodeLoop::try_tick(Unit& u) {
  if (u.finished) return false;
  const auto now = Clock::now();
  if (u.relay) {
    if (u.relay_in->drained()) {
      finish(u);
      return true;
    }
    if (!u.relay_in->poppable(now) || !u.relay_out->can_push()) return false;
    auto v = u.relay_in->try_pop(now);
    if (!v) return false;
    u.relay_out->push(*v);
    return true;
  }
  for (const auto& [_, qs] : u.in)
    for (FrameQueue* q : qs)
      if (!q->poppable(now)) return false;
  for (const auto& [_, sinks] : u.out)
    for (Sink* s : sinks)
      if (!s->can_push()) return false;
  if (u.ran == 0) u.sync_len = ThreadEngine::effective_sync(u.state, tick_limit_);
  const std::string& id = engine_.program().threads[u.thread].id;
  UnitIO io(u.in, u.out, id);
  engine_.unit_tick(u.thread, u.state, io, &trace_);
  ++progress_;
  if (probe_) probe_->store(u.state.theta);
  if (++u.ran == u.sync_len) {
    engine_.finish_sync(u.thread, u.state, u.ran, tick_limit_, &trace_);
    u.ran = 0;
    if (ThreadEngine::finished(u.state, tick_limit_)) finish(u);
  }
  return true;
}

Clock::time_point NodeLoop::next_deadline() const {
  const auto now = Clock::now();
  auto deadline = now + std::chrono::milliseconds(20);
  for (const auto& u : units_) {
    if (u.finished) continue;
    auto consider = [&](const FrameQueue* q) {
      if (auto r = q->head_ready(); r && *r > now) deadline = std::min(deadline, *r);
    };
    if (u.relay) {
      consider(u.relay_in);
      continue;
    }
    for (const auto& [_, qs] : u.in)
      for (const FrameQueue* q : qs) consider(q);
  }
  return deadline;
}

void NodeLoop::run(const std::atomic<bool>* stop, double stall_seconds) {
  std::vector<std::size_t> order(units_.size());
  std::iota(order.begin(), order.end(), 0);
  auto last_progress = Clock::now();
  for (;;) {
    if (stop && stop->load()) return;
    if (shuffle_) std::shuffle(order.begin(), order.end(), rng_);
    bool all_done = true;
    bool progressed = false;
    for (std::size_t i : order) {
      Unit& u = units_[i];
      for (int k = 0; k < 64 && try_tick(u); ++k) progressed = true;
      if (!u.finished) all_done = false;
    }
    if (all_done) return;
    if (progressed) {
      last_progress = Clock::now();
      continue;
    }
    if (stall_seconds > 0 &&
        std::chrono::duration<double>(Clock::now() - last_progress).count() > stall_seconds) {
      std::string report;
      for (const auto& [t, theta] : clocks()) report += " " + t + "=" + std::to_string(theta);
      throw RuntimeError("node stalled; clocks:" + report);
    }
    notifier_->wait_until(next_deadline());
  }
}

Trace NodeLoop::grouped_trace() const {
  std::map<std::string, std::size_t> rank;
  for (std::size_t i = 0; i < engine_.program().threads.size(); ++i) rank[engine_.program().threads[i].id] = i;
  Trace out = trace_;
  std::stable_sort(out.begin(), out.end(),
                   [&](const TraceRecord& a, const TraceRecord& b) { return rank[a.thread] < rank[b.thread]; });
  return out;
}

std::map<std::string, std::int64_t> NodeLoop::clocks() const {
  std::map<std::string, std::int64_t> out;
  for (const auto& u : units_)
    if (!u.relay) out[engine_.program().threads[u.thread].id] = u.state.theta;
  return out;
}

void wire_node(NodeLoop& loop, const DistributedPlan& plan, const std::string& node, const QueueFor& queue,
               const SinkFor& sink) {
  for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
    const LanePlan& lp = plan.lanes[l];
    for (std::size_t h = 1; h < lp.hops.size(); ++h)
      if (lp.hops[h].producer_node == node) loop.add_relay(queue(l, h - 1), sink(l, h));
    if (lp.lane.writers.empty() && lp.hops.back().consumer_node == node) queue(l, lp.hops.size() - 1)->close();
  }
  auto threads = plan.node_threads.find(node);
  if (threads == plan.node_threads.end()) return;
  for (std::size_t t : threads->second) {
    std::map<std::string, std::vector<FrameQueue*>> in;
    std::map<std::string, std::vector<Sink*>> out;
    for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
      const LanePlan& lp = plan.lanes[l];
      if (lp.lane.reader == static_cast<int>(t)) in[lp.lane.chan].push_back(queue(l, lp.hops.size() - 1));
      for (int w : lp.lane.writers)
        if (w == static_cast<int>(t)) out[lp.lane.chan].push_back(sink(l, 0));
    }
    loop.add_thread(t, std::move(in), std::move(out));
  }
}

}  // namespace timetide::detail
