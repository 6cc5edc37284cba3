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

// tt: command-line driver for Timetide programs.
//
// Exit codes: 0 success or PASS, 1 diagnostics, runtime failure or FAIL,
// 2 usage error or unreadable input, 3 INCONCLUSIVE verification.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "timetide/ast_json.hpp"
#include "timetide/constants.hpp"
#include "timetide/desugar.hpp"
#include "timetide/host.hpp"
#include "timetide/lsn.hpp"
#include "timetide/parser.hpp"
#include "timetide/runtime.hpp"
#include "timetide/verify.hpp"

namespace tt = timetide;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInconclusive = 3;

constexpr std::uint64_t kDefaultSeed = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

struct Source {
  std::string path;
  std::vector<std::string> consts;
  std::string host = "standard";
};

struct ObserverArgs {
  std::string file;
  std::string module;
  std::vector<std::string> binds;
  std::string violation;
};

struct Loaded {
  tt::SurfaceProgram surface;
  tt::KernelProgram kernel;
  std::string violation;
  std::string property;  // observer module
};

const tt::HostTable* host_table(const std::string& name) {
  if (name == "standard") return &tt::HostTable::standard();
  throw UsageError("unknown host table " + name);
}

tt::ObserverBinding make_binding(const ObserverArgs& o, const tt::SurfaceProgram& observers) {
  tt::ObserverBinding b;
  b.observer = o.module.empty() ? observers.entry : o.module;
  b.violation = o.violation;
  if (b.violation.empty()) throw UsageError("--violation is required with --observer");
  for (const auto& s : o.binds) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      throw UsageError("--bind expects PORT=CHANNEL, got " + s);
    b.bindings.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return b;
}

Loaded load(const Source& src, const ObserverArgs* obs = nullptr) {
  Loaded out;
  const std::string text = read_file(src.path);
  out.surface = tt::parse_program(text);
  tt::SurfaceProgram program = out.surface;
  if (obs && !obs->file.empty()) {
    const tt::SurfaceProgram observers = tt::parse_program(read_file(obs->file));
    const auto binding = make_binding(*obs, observers);
    program = tt::compose_observer(program, observers, binding);
    out.violation = binding.violation;
    out.property = binding.observer;
  }
  const auto resolved = tt::resolve_constants(program, tt::parse_const_args(src.consts));
  tt::KernelOptions ko;
  ko.host = host_table(src.host);
  std::vector<tt::Diagnostic> warnings;
  ko.warnings = &warnings;
  out.kernel = tt::to_kernel(resolved, ko);
  std::set<std::string> seen;
  for (const auto& w : warnings)
    if (seen.insert(tt::format_diagnostic(w, src.path)).second) std::cerr << tt::format_diagnostic(w, src.path) << "\n";
  return out;
}

void add_source(CLI::App* cmd, Source& src) {
  cmd->add_option("file", src.path, "Timetide source file")->required();
  cmd->add_option("--const", src.consts, "Entry constant NAME=VALUE");
  cmd->add_option("--host", src.host, "Host-function table")->check(CLI::IsMember({"standard"}));
}

void add_observer(CLI::App* cmd, ObserverArgs& o, bool required) {
  auto* f = cmd->add_option("--observer", o.file, "File holding observer modules");
  if (required) f->required();
  cmd->add_option("--module", o.module, "Observer module (default: the file's entry)");
  cmd->add_option("--bind", o.binds, "Observer port binding PORT=CHANNEL");
  cmd->add_option("--violation", o.violation, "Observer output port signalling a violation");
}

tt::Schedule make_schedule(const std::string& policy, std::uint64_t seed, const std::string& priority,
                           const std::string& replay) {
  if (policy == "rr") return tt::Schedule::round_robin();
  if (policy == "random") return tt::Schedule::random(seed);
  if (policy == "greedy") {
    std::vector<std::string> order;
    std::stringstream ss(priority);
    for (std::string item; std::getline(ss, item, ',');)
      if (!item.empty()) order.push_back(item);
    return tt::Schedule::greedy(order);
  }
  if (replay.empty()) throw UsageError("--schedule replay needs --replay FILE");
  nlohmann::json j = read_json(replay);
  if (j.is_object()) {
    if (!j.contains("counterexample")) throw UsageError(replay + " has no counterexample");
    j = j["counterexample"]["order"];
  }
  std::vector<std::pair<std::string, std::int64_t>> order;
  for (const auto& step : j) order.emplace_back(step.at(0).get<std::string>(), step.at(1).get<std::int64_t>());
  return tt::Schedule::replay_of(std::move(order));
}

struct Distribution {
  std::string lsn;
  std::string map;
  bool in_process = false;
  bool spawn = false;
  std::int64_t latency_ms = 0;
  bool ffp = false;
  std::uint64_t seed = 0;
  double watchdog = 60.0;
};

void add_distribution(CLI::App* cmd, Distribution& d) {
  cmd->add_option("--lsn", d.lsn, "Topology JSON (default: one node hosting every thread)");
  cmd->add_option("--map", d.map, "Thread-to-node mapping JSON");
  auto* ip = cmd->add_flag("--in-process", d.in_process, "Worker threads in this process (default)");
  cmd->add_flag("--spawn", d.spawn, "One process per node over loopback sockets")->excludes(ip);
  cmd->add_option("--latency-ms", d.latency_ms, "Added latency per inter-node frame")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--ffp", d.ffp, "Bounded queues with blocking writes");
  cmd->add_option("--seed", d.seed, "Shuffles local unit order; 0 keeps program order");
  cmd->add_option("--watchdog", d.watchdog, "Seconds without progress before reporting a deadlock");
}

struct Deployment {
  tt::LsnTopology lsn;
  tt::Mapping gamma;
  tt::SimOptions options;
};

Deployment deployment(const Distribution& d, const tt::KernelProgram& kp, const tt::HostTable* host) {
  Deployment out;
  if (d.lsn.empty() != d.map.empty()) throw UsageError("--lsn and --map go together");
  if (d.lsn.empty()) {
    out.lsn = tt::LsnTopology::single("node0");
    for (const auto& t : kp.threads) out.gamma[t.id] = "node0";
  } else {
    try {
      out.lsn = tt::LsnTopology::from_json(read_json(d.lsn));
      out.gamma = tt::mapping_from_json(read_json(d.map));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("bad topology or mapping: ") + e.what());
    }
  }
  out.options.transport = d.spawn ? tt::Transport::kSocket : tt::Transport::kInProcess;
  out.options.latency_ms = d.latency_ms;
  out.options.ffp = d.ffp;
  out.options.seed = d.seed;
  out.options.host = host;
  out.options.watchdog_seconds = d.watchdog;
  return out;
}

int report_diagnostics(const std::vector<tt::Diagnostic>& diags, const std::string& file) {
  for (const auto& d : diags) std::cerr << tt::format_diagnostic(d, file) << "\n";
  return tt::has_errors(diags) ? kExitFail : kExitOk;
}

int exit_for(tt::VerdictStatus s) {
  switch (s) {
    case tt::VerdictStatus::kPass:
      return kExitOk;
    case tt::VerdictStatus::kFail:
      return kExitFail;
    case tt::VerdictStatus::kInconclusive:
      return kExitInconclusive;
  }
  return kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Timetide compiler, runtimes and verifier"};
  app.require_subcommand(1);

  Source src;

  auto* parse = app.add_subcommand("parse", "Parse and check a program; report diagnostics only");
  add_source(parse, src);

  auto* emit = app.add_subcommand("emit", "Print the AST (JSON) or the kernel program");
  add_source(emit, src);
  bool emit_ast = false, emit_kernel = false;
  std::string emit_out;
  auto* fa = emit->add_flag("--ast", emit_ast, "Surface AST as JSON");
  auto* fk = emit->add_flag("--kernel", emit_kernel, "Lowered kernel program");
  fa->excludes(fk);
  emit->add_option("-o,--out", emit_out, "Output file (default stdout)");

  auto* run = app.add_subcommand("run", "Run centrally and write the trace as JSON Lines");
  add_source(run, src);
  std::int64_t ticks = 100;
  std::string policy = "rr", priority, replay, trace_out, stimulus;
  std::uint64_t seed = kDefaultSeed;
  bool monitor = false;
  ObserverArgs run_obs;
  run->add_option("--ticks", ticks, "Tick limit")->check(CLI::NonNegativeNumber);
  run->add_option("--schedule", policy, "rr, random, greedy or replay")
      ->check(CLI::IsMember({"rr", "random", "greedy", "replay"}));
  run->add_option("--seed", seed, "Seed for --schedule random");
  run->add_option("--priority", priority, "Comma-separated thread ids for --schedule greedy");
  run->add_option("--replay", replay, "Verdict JSON or [[thread, theta], ...] for --schedule replay");
  run->add_option("--trace", trace_out, "Trace output file (default stdout)");
  run->add_option("--stimulus", stimulus, "JSON Lines of {tick, channel, value} fed by an env thread");
  run->add_flag("--monitor", monitor, "Check channel delays and queue occupancy while running");
  add_observer(run, run_obs, false);

  auto* sim = app.add_subcommand("simulate", "Run distributed over a logical synchrony network");
  add_source(sim, src);
  Distribution dist;
  std::string trace_dir;
  sim->add_option("--ticks", ticks, "Tick limit")->check(CLI::NonNegativeNumber);
  sim->add_option("--trace", trace_out, "Merged trace output file (default stdout)");
  sim->add_option("--trace-dir", trace_dir, "Directory for one trace file per node");
  sim->add_option("--stimulus", stimulus, "JSON Lines of {tick, channel, value}; map thread env to a node");
  add_distribution(sim, dist);

  auto* det = app.add_subcommand("check-determinism", "Compare per-thread traces across many schedules");
  add_source(det, src);
  std::int64_t runs = 100;
  det->add_option("--ticks", ticks, "Tick limit")->check(CLI::NonNegativeNumber);
  det->add_option("--runs", runs, "Number of schedules")->check(CLI::PositiveNumber);
  det->add_option("--seed", seed, "Base seed of the random schedules");

  auto* ver = app.add_subcommand("verify", "Bounded check of an observer property");
  add_source(ver, src);
  ObserverArgs obs;
  add_observer(ver, obs, true);
  std::int64_t bound = 0, max_states = 4'000'000;
  std::string verdict_out;
  ver->add_option("--bound", bound, "Tick bound (default: prelude plus one hyperperiod)")
      ->check(CLI::NonNegativeNumber);
  ver->add_option("--max-states", max_states, "State budget before INCONCLUSIVE")->check(CLI::PositiveNumber);
  ver->add_option("--verdict", verdict_out, "Verdict JSON output file");

  auto* eq = app.add_subcommand("equiv", "Compare centralised and distributed per-thread traces");
  add_source(eq, src);
  eq->add_option("--ticks", ticks, "Tick limit")->check(CLI::NonNegativeNumber);
  add_distribution(eq, dist);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!std::filesystem::exists(src.path)) throw UsageError("no such file: " + src.path);

    if (parse->parsed()) {
      load(src);
      return kExitOk;
    }

    if (emit->parsed()) {
      if (emit_ast) {
        const auto surface = tt::parse_program(read_file(src.path));
        write_output(emit_out, tt::ast_to_json(surface).dump(2) + "\n");
      } else {
        write_output(emit_out, tt::print_kernel(load(src).kernel));
      }
      return kExitOk;
    }

    if (run->parsed()) {
      Loaded l = load(src, &run_obs);
      if (!stimulus.empty()) tt::attach_stimulus(l.kernel, tt::parse_stimulus(read_file(stimulus)));
      tt::RunOptions ro;
      ro.host = host_table(src.host);
      ro.monitor = monitor;
      const auto result = tt::run_centralised(l.kernel, make_schedule(policy, seed, priority, replay), ticks, ro);
      write_output(trace_out, tt::trace_to_jsonl(result.trace));
      for (const auto& v : result.violations) std::cerr << "monitor: " << v << "\n";
      return result.violations.empty() ? kExitOk : kExitFail;
    }

    if (sim->parsed()) {
      Loaded l = load(src);
      if (!stimulus.empty()) tt::attach_stimulus(l.kernel, tt::parse_stimulus(read_file(stimulus)));
      const auto dep = deployment(dist, l.kernel, host_table(src.host));
      if (const int rc = report_diagnostics(tt::check_mapping(dep.gamma, l.kernel, dep.lsn), src.path)) return rc;
      const auto result = tt::simulate_distributed(l.kernel, dep.lsn, dep.gamma, ticks, dep.options);
      if (!trace_dir.empty()) {
        std::filesystem::create_directories(trace_dir);
        for (const auto& [node, t] : result.node_traces)
          write_output((std::filesystem::path(trace_dir) / (node + ".jsonl")).string(), tt::trace_to_jsonl(t));
      }
      write_output(trace_out, tt::trace_to_jsonl(result.merged));
      return kExitOk;
    }

    if (det->parsed()) {
      const Loaded l = load(src);
      tt::DeterminismOptions o;
      o.runs = runs;
      o.seed = seed;
      o.host = host_table(src.host);
      const auto v = tt::check_determinism(l.kernel, ticks, o);
      std::cout << v.to_json().dump(2) << "\n";
      return exit_for(v.status);
    }

    if (ver->parsed()) {
      const Loaded l = load(src, &obs);
      tt::SafetyOptions o;
      o.bound = bound;
      o.max_states = max_states;
      o.host = host_table(src.host);
      const auto v = tt::check_safety(l.kernel, l.violation, o);
      if (!verdict_out.empty()) write_output(verdict_out, v.to_json().dump(2) + "\n");
      std::cout << "Program\tProperty\tResult\n"
                << std::filesystem::path(src.path).stem().string() << "\t" << l.property << "\t"
                << tt::status_name(v.status) << "\n";
      std::cerr << tt::status_name(v.status) << ": " << v.message << "\n";
      return exit_for(v.status);
    }

    if (eq->parsed()) {
      const Loaded l = load(src);
      const auto dep = deployment(dist, l.kernel, host_table(src.host));
      if (const int rc = report_diagnostics(tt::check_mapping(dep.gamma, l.kernel, dep.lsn), src.path)) return rc;
      const auto r = tt::check_equivalence(l.kernel, dep.lsn, dep.gamma, ticks, dep.options);
      nlohmann::ordered_json j;
      j["equal"] = r.equal;
      j["ticks"] = ticks;
      j["records"] = r.central.trace.size();
      j["wall_seconds"] = r.distributed.wall_seconds;
      if (!r.equal) j["divergence"] = r.divergence;
      std::cout << j.dump(2) << "\n";
      return r.equal ? kExitOk : kExitFail;
    }
  } catch (const UsageError& e) {
    std::cerr << "tt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const tt::CompileError& e) {
    report_diagnostics(e.diagnostics(), src.path);
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "tt: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
