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

#include "timetide/verify.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_set>

#include "timetide/desugar.hpp"

namespace timetide {

const char* status_name(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::kPass:
      return "PASS";
    case VerdictStatus::kFail:
      return "FAIL";
    case VerdictStatus::kInconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

nlohmann::ordered_json Verdict::to_json() const {
  nlohmann::ordered_json j;
  j["status"] = status_name(status);
  j["bound"] = bound;
  j["states"] = states;
  j["runs"] = runs;
  j["message"] = message;
  if (status == VerdictStatus::kFail) {
    nlohmann::ordered_json cx;
    cx["schedule"] = schedule;
    cx["order"] = nlohmann::ordered_json::array();
    for (const auto& [t, theta] : order) cx["order"].push_back({t, theta});
    cx["trace"] = nlohmann::ordered_json::array();
    for (const auto& r : counterexample) cx["trace"].push_back(trace_record_json(r));
    j["counterexample"] = cx;
  }
  return j;
}

namespace {

struct ChannelSource {
  bool found = false;
  TypeRef type;
  Expr delay;
  bool array = false;
};

void find_chan_blocks(const Stmt& s, std::vector<const ChannelDecl*>& out) {
  if (s.kind == StmtKind::kChanBlock)
    for (const auto& c : s.channels) out.push_back(&c);
  if (s.kind == StmtKind::kChanBlock || s.kind == StmtKind::kPar || s.kind == StmtKind::kBlock)
    for (const auto& c : s.children) find_chan_blocks(c, out);
}

// Accepts `name`, `name.k` and `name[k]`; returns the global id.
std::string resolve_binding(const ModuleDecl& entry, const std::string& text, ChannelSource& src) {
  std::string base = text;
  std::optional<std::int64_t> index;
  const auto bracket = text.find('[');
  const auto dot = text.rfind('.');
  try {
    if (bracket != std::string::npos && text.back() == ']') {
      base = text.substr(0, bracket);
      index = std::stoll(text.substr(bracket + 1, text.size() - bracket - 2));
    } else if (dot != std::string::npos && dot + 1 < text.size() &&
               std::all_of(text.begin() + static_cast<std::ptrdiff_t>(dot) + 1, text.end(), ::isdigit)) {
      base = text.substr(0, dot);
      index = std::stoll(text.substr(dot + 1));
    }
  } catch (const std::exception&) {
    throw CompileError("E-bind-channel", "malformed channel reference '" + text + "'");
  }
  std::vector<const ChannelDecl*> decls;
  for (const auto& c : entry.channels) decls.push_back(&c);
  find_chan_blocks(entry.body, decls);
  for (const ChannelDecl* c : decls) {
    if (c->name != base) continue;
    src.found = true;
    src.type = c->type;
    src.delay = c->delay;
    src.array = c->type.array_size.has_value();
    break;
  }
  if (!src.found) {
    for (const auto& p : entry.ports) {
      if (p.is_const || p.name != base) continue;
      src.type = p.type;
      src.delay = Expr::lit(std::int64_t{0});
      src.array = p.type.array_size.has_value();
      src.found = true;
      break;
    }
  }
  if (!src.found) throw CompileError("E-bind-channel", "no channel '" + text + "' in module " + entry.name);
  if (src.array != index.has_value())
    throw CompileError("E-bind-channel", src.array ? "channel array '" + base + "' needs an element index"
                                                   : "channel '" + base + "' is not an array");
  src.type.array_size.reset();
  return index ? base + "." + std::to_string(*index) : base;
}

bool name_taken(const ModuleDecl& m, const std::string& n) {
  for (const auto& c : m.channels)
    if (c.name == n) return true;
  for (const auto& p : m.ports)
    if (p.name == n) return true;
  for (const auto& c : m.consts)
    if (c.name == n) return true;
  std::vector<const ChannelDecl*> inner;
  find_chan_blocks(m.body, inner);
  return std::any_of(inner.begin(), inner.end(), [&](const ChannelDecl* c) { return c->name == n; });
}

struct Fingerprint {
  std::uint64_t a = 0, b = 0;
  bool operator==(const Fingerprint&) const = default;
};
struct FingerprintHash {
  std::size_t operator()(const Fingerprint& f) const { return static_cast<std::size_t>(f.a ^ (f.b * 0x9e3779b97f4a7c15ULL)); }
};

Fingerprint fingerprint(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t a = 0xcbf29ce484222325ULL;
  std::uint64_t b = 0x84222325cbf29ce4ULL;
  for (std::uint8_t x : bytes) {
    a = (a ^ x) * 0x100000001b3ULL;
    b = (b + x + 1) * 0xff51afd7ed558ccdULL;
    b ^= b >> 29;
  }
  return {a, b};
}

bool raises(const Trace& t, const std::string& channel) {
  return std::any_of(t.begin(), t.end(), [&](const TraceRecord& r) {
    return r.kind == TraceRecord::Kind::kPush && r.chan == channel && r.value == Value(true);
  });
}

class Explorer {
 public:
  Explorer(const CentralRuntime& rt, std::string violation, std::int64_t max_states)
      : rt_(rt), violation_(std::move(violation)), max_states_(max_states) {}

  void run(const Configuration& root) {
    std::vector<std::uint8_t> bytes;
    rt_.serialize(root, bytes);
    seen_.insert(fingerprint(bytes));
    dfs(root);
  }

  bool found = false;
  bool exhausted = false;
  std::vector<std::pair<std::string, std::int64_t>> path;
  std::int64_t states() const { return static_cast<std::int64_t>(seen_.size()); }

 private:
  const CentralRuntime& rt_;
  std::string violation_;
  std::int64_t max_states_;
  std::unordered_set<Fingerprint, FingerprintHash> seen_;
  std::vector<std::uint8_t> bytes_;

  void dfs(const Configuration& c) {
    if (rt_.done(c)) return;
    const auto en = rt_.enabled_threads(c);
    if (en.empty()) throw RuntimeError("deadlock: no thread is enabled\n" + rt_.describe(c));
    for (std::size_t t : en) {
      Configuration next = c;
      Trace events;
      rt_.react(next, t, &events);
      path.emplace_back(rt_.program().threads[t].id, next.threads[t].theta);
      if (raises(events, violation_)) {
        found = true;
        return;
      }
      bytes_.clear();
      rt_.serialize(next, bytes_);
      if (seen_.insert(fingerprint(bytes_)).second) {
        if (states() > max_states_) {
          exhausted = true;
          return;
        }
        dfs(next);
        if (found || exhausted) return;
      }
      path.pop_back();
    }
  }
};

}  // namespace

SurfaceProgram compose_observer(const SurfaceProgram& program, const SurfaceProgram& observers,
                                const ObserverBinding& binding) {
  SurfaceProgram out = program;
  for (const auto& m : observers.modules) {
    if (out.find_module(m.name))
      throw CompileError("E-dup-module", "observer module '" + m.name + "' clashes with a program module", m.span);
    out.modules.push_back(m);
  }
  const ModuleDecl* obs = out.find_module(binding.observer);
  if (!obs) throw CompileError("E-unknown-module", "no observer module '" + binding.observer + "'");
  ModuleDecl& entry = *out.find_module(out.entry);

  Stmt run;
  run.kind = StmtKind::kRun;
  run.name = binding.observer;
  std::vector<ChannelDecl> added;
  for (const auto& [port, chan] : binding.bindings) {
    ChannelSource src;
    const std::string source_id = resolve_binding(entry, chan, src);
    ChannelDecl tap;
    tap.name = "tap_" + port;
    for (int n = 2; name_taken(entry, tap.name); ++n) tap.name = "tap_" + port + "_" + std::to_string(n);
    tap.type = src.type;
    tap.delay = src.delay;
    tap.tap_of = source_id;
    entry.channels.push_back(tap);
    run.bindings.push_back({port, Expr::ident(tap.name), {}});
  }
  if (!binding.violation.empty()) {
    const PortDecl* p = obs->find_port(binding.violation);
    if (!p || p->direction != PortDirection::kOutput)
      throw CompileError("E-bind-channel", "observer has no output port '" + binding.violation + "'");
    if (name_taken(entry, binding.violation))
      throw CompileError("E-bind-channel", "violation channel '" + binding.violation + "' already exists");
    ChannelDecl v;
    v.name = binding.violation;
    v.type = p->type;
    v.delay = Expr::lit(std::int64_t{0});
    v.sink = true;
    entry.channels.push_back(v);
    run.bindings.push_back({binding.violation, Expr::ident(v.name), {}});
  }
  entry.body = Stmt::par(entry.body, run);
  return out;
}

Hyperperiod hyperperiod(const KernelProgram& program) {
  Hyperperiod out;
  std::int64_t max_offset = 0;
  for (const auto& t : program.threads) {
    bool found = false;
    std::function<void(const KTerm&)> walk = [&](const KTerm& k) {
      if (k->kind == KKind::kLoop && k->task) {
        found = true;
        out.h = lcm64(out.h, k->task->params.period);
        max_offset = std::max(max_offset, k->task->params.offset);
      }
      for (const auto& i : k->items) walk(i);
    };
    walk(t.body);
    if (!found) out.periodic = false;
  }
  std::int64_t max_delta = 0;
  for (const auto& [_, c] : program.channels) max_delta = std::max(max_delta, c.delta);
  const std::int64_t raw = max_offset + max_delta;
  out.prelude = (raw + out.h - 1) / out.h * out.h;
  return out;
}

std::map<std::string, std::string> projection_text(const Trace& t) {
  std::map<std::string, std::string> out;
  for (const auto& [thread, records] : projections(t)) out[thread] = trace_to_jsonl(records);
  return out;
}

std::string first_divergence(const Trace& a, const Trace& b) {
  const auto pa = projections(a);
  const auto pb = projections(b);
  std::set<std::string> threads;
  for (const auto& [k, _] : pa) threads.insert(k);
  for (const auto& [k, _] : pb) threads.insert(k);
  for (const auto& t : threads) {
    const Trace empty;
    const Trace& x = pa.count(t) ? pa.at(t) : empty;
    const Trace& y = pb.count(t) ? pb.at(t) : empty;
    const std::size_t n = std::max(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::string rx = i < x.size() ? trace_record_json(x[i]).dump() : "<end>";
      const std::string ry = i < y.size() ? trace_record_json(y[i]).dump() : "<end>";
      if (rx != ry) return "thread " + t + " record " + std::to_string(i) + ": " + rx + " vs " + ry;
    }
  }
  return "";
}

std::vector<Schedule> determinism_schedules(const KernelProgram& program, std::int64_t runs, std::uint64_t seed) {
  std::vector<Schedule> out;
  std::vector<std::string> ids;
  for (const auto& t : program.threads) ids.push_back(t.id);
  out.push_back(Schedule::round_robin());
  if (runs > 1) out.push_back(Schedule::greedy(ids));
  if (runs > 2) {
    std::reverse(ids.begin(), ids.end());
    out.push_back(Schedule::greedy(ids));
  }
  for (std::int64_t i = 3; i < runs; ++i) out.push_back(Schedule::random(seed + static_cast<std::uint64_t>(i - 3)));
  return out;
}

Verdict check_determinism(const KernelProgram& program, std::int64_t tick_limit, const DeterminismOptions& options) {
  Verdict v;
  v.bound = tick_limit;
  RunOptions ro;
  ro.host = options.host;
  const auto schedules = determinism_schedules(program, options.runs, options.seed);
  Trace reference;
  std::map<std::string, std::string> ref_text;
  for (std::size_t i = 0; i < schedules.size(); ++i) {
    RunResult r = run_centralised(program, schedules[i], tick_limit, ro);
    ++v.runs;
    if (i == 0) {
      reference = std::move(r.trace);
      ref_text = projection_text(reference);
      continue;
    }
    if (projection_text(r.trace) != ref_text) {
      v.status = VerdictStatus::kFail;
      v.schedule = schedules[0].describe() + " vs " + schedules[i].describe();
      v.message = "per-thread traces differ between " + v.schedule + ": " + first_divergence(reference, r.trace);
      v.order = r.order;
      v.counterexample = std::move(r.trace);
      return v;
    }
  }
  v.message = std::to_string(v.runs) + " schedules agree on every per-thread trace";
  return v;
}

Verdict check_safety(const KernelProgram& program, const std::string& violation_channel,
                     const SafetyOptions& options) {
  Verdict v;
  if (!program.channels.count(violation_channel))
    throw CompileError("E-bind-channel", "no violation channel '" + violation_channel + "'");
  const Hyperperiod hp = hyperperiod(program);
  const std::int64_t needed = hp.prelude + hp.h;
  v.bound = options.bound > 0 ? options.bound : needed;
  const HostTable& host = options.host ? *options.host : HostTable::standard();

  if (!host.all_pure()) {
    RunOptions ro;
    ro.host = &host;
    RunResult r = run_centralised(program, Schedule::round_robin(), v.bound, ro);
    v.runs = 1;
    if (raises(r.trace, violation_channel)) {
      v.status = VerdictStatus::kFail;
      v.schedule = Schedule::round_robin().describe();
      v.order = r.order;
      v.counterexample = r.trace;
    } else {
      v.status = VerdictStatus::kInconclusive;
    }
    v.message = "impure host functions: single-schedule test only";
    return v;
  }

  CentralRuntime rt(program, v.bound, &host);
  Trace init_events;
  const Configuration root = rt.initial(&init_events);
  Explorer ex(rt, violation_channel, options.max_states);
  ex.run(root);
  v.states = ex.states();
  if (ex.found) {
    v.status = VerdictStatus::kFail;
    v.order = ex.path;
    v.schedule = "replay(" + std::to_string(ex.path.size()) + " reactions)";
    RunOptions ro;
    ro.host = &host;
    v.counterexample = run_centralised(program, Schedule::replay_of(ex.path), v.bound, ro).trace;
    const auto& last = ex.path.back();
    v.message = violation_channel + " raised by " + last.first + " before theta " + std::to_string(last.second);
    return v;
  }
  if (ex.exhausted) {
    v.status = VerdictStatus::kInconclusive;
    v.message = "state budget of " + std::to_string(options.max_states) + " exhausted";
    return v;
  }
  if (!hp.periodic) {
    v.status = VerdictStatus::kInconclusive;
    v.message = "aperiodic thread; no hyperperiod argument for the bound";
    return v;
  }
  if (v.bound < needed) {
    v.status = VerdictStatus::kInconclusive;
    v.message = "bound " + std::to_string(v.bound) + " is below prelude + hyperperiod = " + std::to_string(needed);
    return v;
  }
  v.status = VerdictStatus::kPass;
  v.message = "no reachable push of true on " + violation_channel + " in " + std::to_string(v.states) + " states";
  return v;
}

}  // namespace timetide
