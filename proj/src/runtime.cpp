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

#include "timetide/runtime.hpp"

#include <algorithm>
#include <random>
#include <sstream>

namespace timetide {

std::vector<Value> initial_tokens(std::int64_t delta, const Value& initial) {
  std::vector<Value> out(static_cast<std::size_t>(std::max<std::int64_t>(delta, 0)));
  if (!out.empty()) out[0] = initial;
  return out;
}

LaneMonitor::LaneMonitor(const std::vector<LaneInfo>& lanes)
    : lanes_(lanes), pushed_(lanes.size()), popped_(lanes.size(), 0) {}

void LaneMonitor::report(std::string msg) {
  if (violations_.size() < 100) violations_.push_back(std::move(msg));
}

void LaneMonitor::on_push(std::size_t lane, const Value& v) { pushed_[lane].push_back(v); }

void LaneMonitor::on_pop(std::size_t lane, const Value& v) {
  const LaneInfo& info = lanes_[lane];
  const std::int64_t m = popped_[lane]++;
  if (info.writers.size() > 1) return;
  Value expected;
  if (m < info.delta) {
    expected = info.tokens[static_cast<std::size_t>(m)];
  } else {
    const auto n = static_cast<std::size_t>(m - info.delta);
    if (n < pushed_[lane].size()) expected = pushed_[lane][n];
  }
  ++checked_pops_;
  if (!(expected == v))
    report("lane " + info.chan + " -> thread " + std::to_string(info.reader) + ": pop " + std::to_string(m) +
           " got " + to_string(v) + ", pushed " + to_string(expected));
}

void LaneMonitor::check_occupancy(const Configuration& c) {
  for (std::size_t i = 0; i < lanes_.size(); ++i) {
    const LaneInfo& info = lanes_[i];
    if (info.writers.size() != 1) continue;
    const ThreadState& w = c.threads[static_cast<std::size_t>(info.writers[0])];
    const ThreadState& r = c.threads[static_cast<std::size_t>(info.reader)];
    std::int64_t expected = info.delta + w.theta - r.theta;
    if (w.terminated) expected = std::max<std::int64_t>(0, expected);
    if (expected != static_cast<std::int64_t>(c.lanes[i].size()))
      report("lane " + info.chan + ": occupancy " + std::to_string(c.lanes[i].size()) + ", expected " +
             std::to_string(expected));
  }
}

class CentralIO : public TickIO {
 public:
  CentralIO(const CentralRuntime& rt, Configuration& c, std::size_t thread, LaneMonitor* monitor)
      : rt_(rt), c_(c), thread_(thread), monitor_(monitor) {}

  Value pop(const std::string& chan) override {
    const auto& ids = rt_.in_lanes_[thread_].at(chan);
    Value out;
    int non_empty = 0;
    for (std::size_t lane : ids) {
      auto& q = c_.lanes[lane];
      Value v;
      if (q.empty()) {
        for (int w : rt_.lanes_[lane].writers)
          if (!c_.threads[static_cast<std::size_t>(w)].terminated)
            throw RuntimeError("pop from empty queue on " + chan + " by " + rt_.program_.threads[thread_].id +
                               " (guard violated)");
      } else {
        v = std::move(q.front());
        q.pop_front();
      }
      if (monitor_) monitor_->on_pop(lane, v);
      if (!v.is_empty()) {
        ++non_empty;
        out = std::move(v);
      }
    }
    if (non_empty > 1)
      throw RuntimeError("pipeline replicas pushed " + std::to_string(non_empty) + " values on " + chan +
                         " in one tick");
    return out;
  }

  void push(const std::string& chan, const Value& v) override {
    auto it = rt_.out_lanes_[thread_].find(chan);
    if (it == rt_.out_lanes_[thread_].end()) return;
    for (std::size_t lane : it->second) {
      c_.lanes[lane].push_back(v);
      if (monitor_) monitor_->on_push(lane, v);
    }
  }

 private:
  const CentralRuntime& rt_;
  Configuration& c_;
  std::size_t thread_;
  LaneMonitor* monitor_;
};

CentralRuntime::CentralRuntime(const KernelProgram& program, std::int64_t tick_limit, const HostTable* host)
    : program_(program),
      engine_(program, host ? *host : HostTable::standard()),
      tick_limit_(tick_limit),
      in_lanes_(program.threads.size()),
      out_lanes_(program.threads.size()) {
  for (const auto& [id, spec] : program.channels) {
    std::vector<int> readers, writers;
    for (std::size_t t = 0; t < program.threads.size(); ++t) {
      const auto& th = program.threads[t];
      if (std::find(th.inbound.begin(), th.inbound.end(), id) != th.inbound.end()) readers.push_back(int(t));
      if (std::find(th.outbound.begin(), th.outbound.end(), id) != th.outbound.end()) writers.push_back(int(t));
    }
    for (int r : readers) {
      auto add = [&](std::vector<int> ws, bool with_initial) {
        LaneInfo lane;
        lane.chan = id;
        lane.writers = std::move(ws);
        lane.reader = r;
        lane.delta = spec.delta;
        lane.tokens = initial_tokens(spec.delta, with_initial ? spec.initial : Value());
        const std::size_t idx = lanes_.size();
        in_lanes_[static_cast<std::size_t>(r)][id].push_back(idx);
        for (int w : lane.writers) out_lanes_[static_cast<std::size_t>(w)][id].push_back(idx);
        lanes_.push_back(std::move(lane));
      };
      if (writers.size() > 1 && spec.merge_writers) {
        for (std::size_t j = 0; j < writers.size(); ++j) add({writers[j]}, j == 0);
      } else {
        add(writers, true);
      }
    }
  }
}

Configuration CentralRuntime::initial(Trace* trace) const {
  Configuration c;
  for (std::size_t t = 0; t < program_.threads.size(); ++t) {
    c.threads.push_back(engine_.initial(t));
    if (tick_limit_ > 0) engine_.settle(t, c.threads.back(), trace);
  }
  for (const auto& lane : lanes_) c.lanes.emplace_back(lane.tokens.begin(), lane.tokens.end());
  return c;
}

bool CentralRuntime::done(const Configuration& c) const {
  return std::all_of(c.threads.begin(), c.threads.end(),
                     [&](const ThreadState& s) { return ThreadEngine::finished(s, tick_limit_); });
}

bool CentralRuntime::enabled(const Configuration& c, std::size_t thread) const {
  const ThreadState& s = c.threads[thread];
  if (ThreadEngine::finished(s, tick_limit_)) return false;
  const std::int64_t target = s.theta + ThreadEngine::effective_sync(s, tick_limit_);
  for (const auto& [chan, ids] : in_lanes_[thread]) {
    for (std::size_t lane : ids) {
      const LaneInfo& info = lanes_[lane];
      for (int w : info.writers) {
        const ThreadState& ws = c.threads[static_cast<std::size_t>(w)];
        if (ws.terminated) continue;
        if (target - ws.theta > info.delta) return false;
      }
    }
  }
  return true;
}

std::vector<std::size_t> CentralRuntime::enabled_threads(const Configuration& c) const {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < c.threads.size(); ++t)
    if (enabled(c, t)) out.push_back(t);
  return out;
}

void CentralRuntime::react(Configuration& c, std::size_t thread, Trace* trace, LaneMonitor* monitor) const {
  CentralIO io(*this, c, thread, monitor);
  engine_.react(thread, c.threads[thread], io, tick_limit_, trace);
  if (monitor) monitor->check_occupancy(c);
}

std::string CentralRuntime::describe(const Configuration& c) const {
  std::ostringstream out;
  for (std::size_t t = 0; t < c.threads.size(); ++t) {
    const ThreadState& s = c.threads[t];
    out << "  " << program_.threads[t].id << ": theta=" << s.theta;
    if (s.terminated) {
      out << " terminated";
    } else if (auto d = ThreadEngine::pending_sync(s)) {
      out << " next sync " << *d;
      for (const auto& [chan, ids] : in_lanes_[t])
        for (std::size_t lane : ids)
          for (int w : lanes_[lane].writers)
            out << "; " << chan << " writer " << program_.threads[static_cast<std::size_t>(w)].id
                << " theta=" << c.threads[static_cast<std::size_t>(w)].theta << " delta=" << lanes_[lane].delta;
    }
    out << "\n";
  }
  return out.str();
}

void CentralRuntime::serialize(const Configuration& c, std::vector<std::uint8_t>& out) const {
  for (const auto& s : c.threads) serialize_state(s, out);
  for (const auto& q : c.lanes) {
    const std::uint64_t n = q.size();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
    for (const auto& v : q) encode_value(v, out);
  }
}

Schedule Schedule::round_robin() { return {}; }

Schedule Schedule::random(std::uint64_t seed) {
  Schedule s;
  s.policy = Policy::kRandom;
  s.seed = seed;
  return s;
}

Schedule Schedule::greedy(std::vector<std::string> priority) {
  Schedule s;
  s.policy = Policy::kGreedy;
  s.priority = std::move(priority);
  return s;
}

Schedule Schedule::replay_of(std::vector<std::pair<std::string, std::int64_t>> order) {
  Schedule s;
  s.policy = Policy::kReplay;
  s.replay = std::move(order);
  return s;
}

std::string Schedule::describe() const {
  switch (policy) {
    case Policy::kRoundRobin:
      return "round-robin";
    case Policy::kRandom:
      return "random(seed=" + std::to_string(seed) + ")";
    case Policy::kGreedy: {
      std::string out = "greedy(";
      for (std::size_t i = 0; i < priority.size(); ++i) out += (i ? "," : "") + priority[i];
      return out + ")";
    }
    case Policy::kReplay:
      return "replay(" + std::to_string(replay.size()) + " reactions)";
  }
  return "?";
}

RunResult run_centralised(const KernelProgram& program, const Schedule& schedule, std::int64_t tick_limit,
                          const RunOptions& options) {
  CentralRuntime rt(program, tick_limit, options.host);
  RunResult result;
  Configuration c = rt.initial(&result.trace);
  std::unique_ptr<LaneMonitor> monitor;
  if (options.monitor) monitor = std::make_unique<LaneMonitor>(rt.lanes());

  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < program.threads.size(); ++t) order.push_back(t);
  if (schedule.policy == Schedule::Policy::kGreedy) {
    std::vector<std::size_t> pri;
    for (const auto& id : schedule.priority) {
      const int idx = program.thread_index(id);
      if (idx < 0) throw RuntimeError("greedy schedule names unknown thread '" + id + "'");
      pri.push_back(static_cast<std::size_t>(idx));
    }
    for (std::size_t t : order)
      if (std::find(pri.begin(), pri.end(), t) == pri.end()) pri.push_back(t);
    order = pri;
  }
  std::mt19937_64 rng(schedule.seed);
  std::size_t rr = 0;
  std::size_t replay_pos = 0;

  while (!rt.done(c)) {
    std::size_t pick = 0;
    if (schedule.policy == Schedule::Policy::kReplay) {
      if (replay_pos >= schedule.replay.size()) break;
      const auto& [id, theta] = schedule.replay[replay_pos++];
      const int idx = program.thread_index(id);
      if (idx < 0 || !rt.enabled(c, static_cast<std::size_t>(idx)))
        throw RuntimeError("replay step " + std::to_string(replay_pos) + ": thread '" + id + "' is not enabled");
      pick = static_cast<std::size_t>(idx);
    } else {
      const auto en = rt.enabled_threads(c);
      if (en.empty()) throw RuntimeError("deadlock: no thread is enabled\n" + rt.describe(c));
      if (schedule.policy == Schedule::Policy::kRandom) {
        pick = en[std::uniform_int_distribution<std::size_t>(0, en.size() - 1)(rng)];
      } else {
        for (std::size_t i = 0; i < order.size(); ++i) {
          const std::size_t cand = order[(rr + i) % order.size()];
          if (std::find(en.begin(), en.end(), cand) != en.end()) {
            pick = cand;
            if (schedule.policy == Schedule::Policy::kRoundRobin) rr = (rr + i + 1) % order.size();
            break;
          }
        }
      }
    }
    rt.react(c, pick, &result.trace, monitor.get());
    ++result.reactions;
    result.order.emplace_back(program.threads[pick].id, c.threads[pick].theta);
    if (schedule.policy == Schedule::Policy::kReplay && c.threads[pick].theta != schedule.replay[replay_pos - 1].second)
      throw RuntimeError("replay step " + std::to_string(replay_pos) + ": clock mismatch");
  }
  if (monitor) result.violations = monitor->violations();
  for (const auto& s : c.threads) result.clocks.push_back(s.theta);
  return result;
}

std::vector<Stimulus> parse_stimulus(const std::string& jsonl) {
  std::vector<Stimulus> out;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    Stimulus s;
    s.tick = j.at("tick").get<std::int64_t>();
    s.channel = j.at("channel").get<std::string>();
    s.value = value_from_json(j.at("value"));
    if (s.tick < 0) throw std::runtime_error("stimulus tick must be non-negative");
    out.push_back(std::move(s));
  }
  return out;
}

void attach_stimulus(KernelProgram& program, const std::vector<Stimulus>& stimulus) {
  if (program.find_thread("env")) throw std::runtime_error("program already has a thread named env");
  std::map<std::int64_t, std::vector<const Stimulus*>> by_tick;
  std::vector<std::string> outbound;
  for (const auto& s : stimulus) {
    auto it = program.channels.find(s.channel);
    if (it == program.channels.end()) throw std::runtime_error("stimulus names unknown channel '" + s.channel + "'");
    if (!it->second.writers.empty() && it->second.writers != std::vector<std::string>{"env"})
      throw std::runtime_error("stimulus channel '" + s.channel + "' already has a writer");
    by_tick[s.tick].push_back(&s);
    if (std::find(outbound.begin(), outbound.end(), s.channel) == outbound.end()) outbound.push_back(s.channel);
    it->second.writers = {"env"};
  }
  std::sort(outbound.begin(), outbound.end());
  std::vector<KTerm> items;
  std::int64_t tick = 0;
  for (const auto& [t, recs] : by_tick) {
    if (t > tick) items.push_back(k::sync(t - tick));
    for (const Stimulus* s : recs) items.push_back(k::send(Expr::chan(s->channel), Expr::lit(s->value)));
    items.push_back(k::sync(1));
    tick = t + 1;
  }
  program.threads.push_back({"env", k::seq(std::move(items)), {}, outbound});
}

}  // namespace timetide
