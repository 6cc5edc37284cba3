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

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "doctest.h"
#include "testing.hpp"
#include "timetide/frame.hpp"
#include "timetide/interpreter.hpp"
#include "timetide/lsn.hpp"
#include "timetide/runtime.hpp"

using namespace timetide;

namespace {

Value I(std::int64_t v) { return Value(v); }

KernelProgram writer_reader(std::int64_t delta) {
  KernelProgram p;
  p.threads.push_back(KThread{"u", k::loop(k::seq({k::send(Expr::chan("c"), Expr::lit(I(1))), k::sync(1)})), {}, {"c"}});
  p.threads.push_back(KThread{"t", k::loop(k::seq({k::sync(1)})), {"c"}, {}});
  p.channels["c"] = ChannelSpec{"c", delta, "int", {"u"}, {"t"}};
  return p;
}

LsnTopology two_nodes(std::int64_t lambda) {
  return LsnTopology::from_json(nlohmann::json::parse(
      R"({"nodes":["a","b"],"edges":[{"from":"a","to":"b","lambda":)" + std::to_string(lambda) + "}]}"));
}

const LanePlan& lane_of(const DistributedPlan& plan, const std::string& chan) {
  for (const auto& l : plan.lanes)
    if (l.lane.chan == chan) return l;
  throw std::out_of_range(chan);
}

std::int64_t count_completions(const Trace& t, const std::string& thread) {
  std::int64_t n = 0;
  for (const auto& r : t)
    if (r.thread == thread && r.kind == TraceRecord::Kind::kComplete) ++n;
  return n;
}

}  // namespace

TEST_CASE("frame encoding") {
  CHECK(encode_frame(Value()) == std::vector<std::uint8_t>{0x00});
  const std::vector<std::uint8_t> want = {0x01, 9, 0, 0, 0, 0x01, 42, 0, 0, 0, 0, 0, 0, 0};
  CHECK(encode_frame(I(42)) == want);
  CHECK(decode_frame(want) == I(42));
  CHECK(decode_frame(std::vector<std::uint8_t>{0x00}).is_empty());
  CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>{0x02}), FrameError);
  CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>(want.begin(), want.end() - 1)), FrameError);
  CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>{0x01, 9, 0}), FrameError);
  CHECK_THROWS_AS(decode_frame(std::vector<std::uint8_t>{}), FrameError);
  for (const Value& v : {I(-7), Value(2.5), Value(true), Value(Array{I(1), Value(), I(3)})})
    CHECK(decode_frame(encode_frame(v)) == v);
}

TEST_CASE("initial channel contents") {
  CHECK(init_channel(0).empty());
  CHECK(init_channel(3) == std::deque<Value>{Value(), Value(), Value()});
  CHECK(init_channel(1, I(4)) == std::deque<Value>{I(4)});
  CHECK(init_channel(3, I(4)) == std::deque<Value>{I(4), Value(), Value()});
}

TEST_CASE("frame queues release frames after their ready time") {
  FrameQueue q;
  const auto now = FrameQueue::Clock::now();
  q.push(I(1), now + std::chrono::hours(1));
  CHECK_FALSE(q.poppable(now));
  CHECK(q.head_ready().has_value());
  CHECK_FALSE(q.try_pop(now).has_value());
  CHECK(q.try_pop(now + std::chrono::hours(2)) == I(1));
  q.close();
  CHECK(q.drained());
  CHECK(q.pop().is_empty());
}

TEST_CASE("bounded queues refuse pushes when full") {
  FrameQueue q(2);
  CHECK(q.try_push(I(1)));
  CHECK(q.try_push(I(2)));
  CHECK_FALSE(q.has_space());
  CHECK_FALSE(q.try_push(I(3)));
  int hooks = 0;
  q.set_pop_hook([&] { ++hooks; });
  CHECK(q.pop() == I(1));
  CHECK(q.has_space());
  CHECK(hooks == 1);
}

TEST_CASE("shortest routes follow directed edges") {
  const LsnTopology lsn = tt_test::corpus_topology("trading");
  const auto r = shortest_route(lsn, "desk1", "exchange");
  REQUIRE(r.has_value());
  CHECK(r->nodes == std::vector<std::string>{"desk1", "desk0", "exchange"});
  CHECK(r->total == 4);
  CHECK(r->total == std::accumulate(r->lambdas.begin(), r->lambdas.end(), std::int64_t{0}));
  const auto self = shortest_route(lsn, "desk0", "desk0");
  REQUIRE(self.has_value());
  CHECK(self->total == 0);
  CHECK_FALSE(shortest_route(two_nodes(1), "b", "a").has_value());
}

TEST_CASE("topology validation") {
  using nlohmann::json;
  CHECK_THROWS(LsnTopology::from_json(json::parse(R"({"nodes":["a","a"],"edges":[]})")));
  CHECK_THROWS(LsnTopology::from_json(json::parse(R"({"nodes":["a"],"edges":[{"from":"a","to":"a","lambda":1}]})")));
  CHECK_THROWS(LsnTopology::from_json(json::parse(R"({"nodes":["a"],"edges":[{"from":"a","to":"z","lambda":1}]})")));
  CHECK_THROWS(two_nodes(-1));
}

TEST_CASE("mapping every thread to one node is valid") {
  const KernelProgram kp = tt_test::compile_corpus("trading");
  Mapping gamma;
  for (const auto& t : kp.threads) gamma[t.id] = "n";
  CHECK(check_mapping(gamma, kp, LsnTopology::single("n")).empty());
}

TEST_CASE("mapping diagnostics") {
  const KernelProgram p = writer_reader(5);
  SUBCASE("path delay above the channel delay") {
    const auto d = check_mapping({{"u", "a"}, {"t", "b"}}, p, two_nodes(7));
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == "E-delay-deficit");
    CHECK(d[0].message.find("exceeds delay 5 by 2") != std::string::npos);
    CHECK_THROWS_AS(plan_distribution(p, two_nodes(7), {{"u", "a"}, {"t", "b"}}, 10), CompileError);
  }
  SUBCASE("no route") {
    const auto d = check_mapping({{"u", "b"}, {"t", "a"}}, p, two_nodes(1));
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == "E-no-route");
  }
  SUBCASE("unmapped and unknown") {
    const auto d = check_mapping({{"u", "a"}, {"ghost", "a"}}, p, two_nodes(1));
    std::vector<std::string> codes;
    for (const auto& x : d) codes.push_back(x.code);
    CHECK(std::find(codes.begin(), codes.end(), "E-unmapped-thread") != codes.end());
    CHECK(std::find(codes.begin(), codes.end(), "E-unknown-thread") != codes.end());
    const auto e = check_mapping({{"u", "a"}, {"t", "mars"}}, p, two_nodes(1));
    REQUIRE(!e.empty());
    CHECK(e[0].code == "E-unknown-node");
  }
}

TEST_CASE("lanes keep the delay as tokens across hops") {
  const std::int64_t delta = 7, lambda = 5;
  const auto plan = plan_distribution(writer_reader(delta), two_nodes(lambda), {{"u", "a"}, {"t", "b"}}, 10);
  const LanePlan& l = lane_of(plan, "c");
  REQUIRE(l.hops.size() == 1);
  CHECK(l.hops[0].remote);
  CHECK(static_cast<std::int64_t>(l.hops[0].tokens.size()) == delta);
  // the surplus over the link delay is held locally at the receiver
  CHECK(static_cast<std::int64_t>(l.hops[0].tokens.size()) - lambda == 2);
}

TEST_CASE("multi-hop lanes split their tokens along the route") {
  const KernelProgram kp = tt_test::compile_corpus("trading");
  const LsnTopology lsn = tt_test::corpus_topology("trading");
  const auto plan = plan_distribution(kp, lsn, tt_test::corpus_mapping("trading"), 100);
  const LanePlan& l = lane_of(plan, "orders.1");
  const auto route = shortest_route(lsn, "desk1", "exchange");
  REQUIRE(route.has_value());
  REQUIRE(l.hops.size() == route->lambdas.size());
  std::int64_t total = 0;
  for (std::size_t i = 0; i < l.hops.size(); ++i) {
    CHECK(l.hops[i].producer_node == route->nodes[i]);
    CHECK(l.hops[i].consumer_node == route->nodes[i + 1]);
    const auto n = static_cast<std::int64_t>(l.hops[i].tokens.size());
    const std::int64_t slack = i + 1 == l.hops.size() ? l.lane.delta - route->total : 0;
    CHECK(n == route->lambdas[i] + slack);
    total += n;
  }
  CHECK(total == l.lane.delta);
  CHECK(plan.node_threads.at("desk1").size() == 1);
}

TEST_CASE("a node without its sender stalls at the delay") {
  const KernelProgram p = writer_reader(2);
  FrameQueue c;
  c.fill(init_channel(2));
  std::atomic<std::int64_t> progress{0};
  std::atomic<bool> stop{false};
  std::thread runner([&] {
    try {
      run_node(p, 1, {{"c", {&c}}}, {}, 50, &progress, &stop);
    } catch (...) {
    }
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(150));
  CHECK(progress.load() == 2);
  stop = true;
  runner.join();
}

TEST_CASE("a node with closed inputs runs to the limit") {
  const KernelProgram kp = tt_test::compile_corpus("trading");
  const std::size_t t = tt_test::thread_index(kp, "Trader[0]");
  std::map<std::string, std::unique_ptr<FrameQueue>> qs;
  std::map<std::string, std::vector<FrameQueue*>> in, out;
  for (const auto& ch : kp.threads[t].inbound) {
    qs[ch] = std::make_unique<FrameQueue>();
    qs[ch]->fill(init_channel(kp.channels.at(ch).delta));
    qs[ch]->close();
    in[ch] = {qs[ch].get()};
  }
  for (const auto& ch : kp.threads[t].outbound) {
    qs[ch] = std::make_unique<FrameQueue>();
    out[ch] = {qs[ch].get()};
  }
  std::atomic<std::int64_t> progress{0};
  const Trace trace = run_node(kp, t, in, out, 30, &progress);
  CHECK(progress.load() == 30);
  // releases every 6 ticks, each finishing 3 ticks later
  std::int64_t oracle = 0;
  for (std::int64_t r = 0; r + 3 <= 30; r += 6) ++oracle;
  CHECK(count_completions(trace, "Trader[0]") == oracle);
  for (const auto& ch : kp.threads[t].outbound) CHECK(qs[ch]->size() == 30);
}

TEST_CASE("distributed runs match the centralised trace") {
  for (const char* name : {"trading", "cruise", "sensor"}) {
    CAPTURE(name);
    const KernelProgram kp = tt_test::compile_corpus(name);
    const LsnTopology lsn = tt_test::corpus_topology(name);
    const Mapping gamma = tt_test::corpus_mapping(name);
    SimOptions o;
    o.watchdog_seconds = 30;
    const auto in_proc = check_equivalence(kp, lsn, gamma, 300, o);
    CHECK_MESSAGE(in_proc.equal, in_proc.divergence);
    o.transport = Transport::kSocket;
    const auto sock = check_equivalence(kp, lsn, gamma, 300, o);
    CHECK_MESSAGE(sock.equal, sock.divergence);
    CHECK(trace_to_jsonl(sock.distributed.merged) == trace_to_jsonl(in_proc.distributed.merged));
    for (const auto& [node, clock] : sock.distributed.clocks) CHECK(clock == 300);
  }
}

TEST_CASE("shuffled node schedules and bounded queues do not change traces") {
  const KernelProgram kp = tt_test::compile_corpus("sensor");
  const LsnTopology lsn = tt_test::corpus_topology("sensor");
  const Mapping gamma = tt_test::corpus_mapping("sensor");
  const auto base = simulate_distributed(kp, lsn, gamma, 200);
  SimOptions o;
  o.seed = 17;
  o.ffp = true;
  const auto shuffled = simulate_distributed(kp, lsn, gamma, 200, o);
  CHECK(base.node_traces == shuffled.node_traces);
}

TEST_CASE("shared lanes of unmerged writers are rejected") {
  KernelProgram p = writer_reader(2);
  p.threads.push_back(KThread{"v", p.threads[0].body, {}, {"c"}});
  p.channels["c"].writers.push_back("v");
  Mapping gamma = {{"u", "a"}, {"v", "a"}, {"t", "b"}};
  CHECK_THROWS(simulate_distributed(p, two_nodes(1), gamma, 10));
}
