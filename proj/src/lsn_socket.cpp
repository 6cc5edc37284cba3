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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "node_loop.hpp"
#include "timetide/host.hpp"
#include "timetide/lsn.hpp"

namespace timetide::detail {

namespace {

using Clock = std::chrono::steady_clock;
constexpr char kMagic[4] = {'T', 'T', 'L', '1'};

[[noreturn]] void sys_fail(const std::string& what) { throw RuntimeError(what + ": " + std::strerror(errno)); }

bool read_full(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

bool write_full(int fd, const void* buf, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(buf);
  while (n > 0) {
    const ssize_t r = ::send(fd, p, n, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* p, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

/// Reads one length-delimited frame; nullopt on end of stream.
std::optional<Value> read_frame(int fd) {
  std::vector<std::uint8_t> bytes(1);
  if (!read_full(fd, bytes.data(), 1)) return std::nullopt;
  if (bytes[0] == kFramePayload) {
    bytes.resize(5);
    if (!read_full(fd, bytes.data() + 1, 4)) throw FrameError("truncated frame header");
    const auto len = static_cast<std::size_t>(get_le(bytes.data() + 1, 4));
    bytes.resize(5 + len);
    if (!read_full(fd, bytes.data() + 5, len)) throw FrameError("truncated frame body");
  }
  return decode_frame(bytes);
}

int listen_loopback(std::uint16_t& port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("bind");
  if (::listen(fd, 16) < 0) sys_fail("listen");
  socklen_t len = sizeof addr;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) < 0) sys_fail("getsockname");
  port = ntohs(addr.sin_port);
  return fd;
}

int connect_loopback(std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_fail("socket");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) sys_fail("connect");
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

/// Producer end of a remote hop. In FFP mode the consumer returns one credit
/// byte per popped frame, and the sink refuses to exceed the queue capacity.
class SocketSink : public Sink {
 public:
  SocketSink(int fd, bool ffp, std::size_t capacity, std::size_t initial, Notifier* notifier)
      : fd_(fd), ffp_(ffp), capacity_(capacity), occupancy_(static_cast<std::int64_t>(initial)) {
    if (ffp_) {
      credits_ = std::thread([this, notifier] {
        std::uint8_t buf[256];
        for (;;) {
          const ssize_t r = ::recv(fd_, buf, sizeof buf, 0);
          if (r <= 0) {
            if (r < 0 && errno == EINTR) continue;
            peer_gone_ = true;
            notifier->notify();
            return;
          }
          occupancy_ -= r;
          notifier->notify();
        }
      });
    }
  }

  ~SocketSink() override {
    close();
    if (credits_.joinable()) {
      ::shutdown(fd_, SHUT_RDWR);
      credits_.join();
    }
    ::close(fd_);
  }

  bool can_push() const override {
    return !ffp_ || peer_gone_.load() || occupancy_.load() < static_cast<std::int64_t>(capacity_);
  }

  void push(const Value& v) override {
    buf_.clear();
    encode_frame(v, buf_);
    ++occupancy_;
    // A reader that already reached its tick limit stops listening; the
    // remaining frames have nobody to affect.
    if (!broken_ && !write_full(fd_, buf_.data(), buf_.size())) broken_ = true;
  }

  void close() override {
    if (closed_) return;
    closed_ = true;
    ::shutdown(fd_, SHUT_WR);
  }

 private:
  int fd_;
  bool ffp_;
  std::size_t capacity_;
  std::atomic<std::int64_t> occupancy_;
  std::atomic<bool> peer_gone_{false};
  std::thread credits_;
  std::vector<std::uint8_t> buf_;
  bool broken_ = false;
  bool closed_ = false;
};

struct Inbound {
  int fd = -1;
  std::unique_ptr<FrameQueue> queue;
  std::thread reader;
  std::string error;

  ~Inbound() {
    if (fd < 0) return;
    ::shutdown(fd, SHUT_RDWR);
    if (reader.joinable()) reader.join();
    ::close(fd);
  }
};

struct HopEndpoint {
  std::size_t lane;
  std::size_t hop;
};

std::string clocks_text(const std::map<std::string, std::int64_t>& clocks) {
  std::ostringstream os;
  for (const auto& [t, theta] : clocks) os << t << ' ' << theta << '\n';
  return os.str();
}

std::map<std::string, std::int64_t> parse_clocks(const std::string& text) {
  std::map<std::string, std::int64_t> out;
  std::istringstream is(text);
  std::string t;
  std::int64_t theta;
  while (is >> t >> theta) out[t] = theta;
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Body of a node process. Returns the process exit status.
int node_main(const KernelProgram& program, const DistributedPlan& plan, std::size_t node_index,
              std::int64_t tick_limit, const SimOptions& options,
              const std::vector<std::vector<int>>& listeners, const std::vector<std::vector<std::uint16_t>>& ports,
              const std::filesystem::path& dir) {
  const std::string& node = plan.nodes[node_index];
  const auto base = dir / ("node" + std::to_string(node_index));
  const HostTable& host = options.host ? *options.host : HostTable::standard();
  ThreadEngine engine(program, host);
  Notifier notifier;
  NodeLoop loop(engine, tick_limit, &notifier, options.seed ? options.seed + node_index : 0);
  std::vector<std::vector<FrameQueue*>> queue_of(plan.lanes.size());
  std::vector<std::vector<Sink*>> sink_of(plan.lanes.size());
  std::vector<std::unique_ptr<FrameQueue>> local_queues;
  std::vector<std::unique_ptr<Sink>> owned_sinks;
  std::vector<std::unique_ptr<Inbound>> inbound;
  try {
    for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
      const auto& hops = plan.lanes[l].hops;
      queue_of[l].assign(hops.size(), nullptr);
      sink_of[l].assign(hops.size(), nullptr);
      for (std::size_t h = 0; h < hops.size(); ++h) {
        const HopPlan& hop = hops[h];
        if (!hop.remote && hop.consumer_node == node) {
          auto q = std::make_unique<FrameQueue>(options.ffp ? std::optional<std::size_t>(hop.tokens.size() + 4)
                                                             : std::nullopt);
          q->fill(hop.tokens);
          q->set_consumer(&notifier);
          q->set_producer(&notifier);
          owned_sinks.push_back(std::make_unique<QueueSink>(q.get(), std::chrono::milliseconds(0)));
          queue_of[l][h] = q.get();
          sink_of[l][h] = owned_sinks.back().get();
          local_queues.push_back(std::move(q));
        }
      }
    }
    // Producers connect first; the listen backlog holds the connection
    // until the consumer accepts it.
    for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
      for (std::size_t h = 0; h < plan.lanes[l].hops.size(); ++h) {
        const HopPlan& hop = plan.lanes[l].hops[h];
        if (!hop.remote || hop.producer_node != node) continue;
        const int fd = connect_loopback(ports[l][h]);
        std::vector<std::uint8_t> hs(kMagic, kMagic + 4);
        put_u32(hs, static_cast<std::uint32_t>(hop.key.size()));
        hs.insert(hs.end(), hop.key.begin(), hop.key.end());
        put_u64(hs, hop.tokens.size());
        if (!write_full(fd, hs.data(), hs.size())) sys_fail("handshake " + hop.key);
        owned_sinks.push_back(
            std::make_unique<SocketSink>(fd, options.ffp, hop.tokens.size() + 4, hop.tokens.size(), &notifier));
        sink_of[l][h] = owned_sinks.back().get();
      }
    }
    for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
      for (std::size_t h = 0; h < plan.lanes[l].hops.size(); ++h) {
        const HopPlan& hop = plan.lanes[l].hops[h];
        if (!hop.remote || hop.consumer_node != node) continue;
        const int fd = ::accept(listeners[l][h], nullptr, nullptr);
        if (fd < 0) sys_fail("accept " + hop.key);
        std::uint8_t head[8];
        if (!read_full(fd, head, 8) || std::memcmp(head, kMagic, 4) != 0)
          throw RuntimeError("bad handshake on " + hop.key);
        std::string key(get_le(head + 4, 4), '\0');
        std::uint8_t count[8];
        if (!read_full(fd, key.data(), key.size()) || !read_full(fd, count, 8))
          throw RuntimeError("truncated handshake on " + hop.key);
        if (key != hop.key) throw RuntimeError("handshake names " + key + ", expected " + hop.key);
        if (get_le(count, 8) != hop.tokens.size())
          throw RuntimeError("handshake token count mismatch on " + hop.key);
        auto in = std::make_unique<Inbound>();
        in->fd = fd;
        in->queue = std::make_unique<FrameQueue>();
        // The receiver seeds its own initial tokens.
        in->queue->fill(hop.tokens);
        in->queue->set_consumer(&notifier);
        if (options.ffp) {
          in->queue->set_pop_hook([fd] {
            const std::uint8_t credit = 1;
            write_full(fd, &credit, 1);
          });
        }
        const auto latency = std::chrono::milliseconds(options.latency_ms);
        Inbound* raw = in.get();
        in->reader = std::thread([raw, latency, fd] {
          try {
            while (auto v = read_frame(fd)) raw->queue->push(std::move(*v), Clock::now() + latency);
          } catch (const std::exception& e) {
            raw->error = e.what();
          }
          raw->queue->close();
        });
        queue_of[l][h] = in->queue.get();
        inbound.push_back(std::move(in));
      }
    }
    wire_node(
        loop, plan, node, [&](std::size_t l, std::size_t h) { return queue_of[l][h]; },
        [&](std::size_t l, std::size_t h) { return sink_of[l][h]; });
    loop.run(nullptr, options.watchdog_seconds);
    for (const auto& in : inbound)
      if (!in->error.empty()) throw RuntimeError("transport: " + in->error);
  } catch (const std::exception& e) {
    std::string report = std::string(e.what()) + "\nclocks:";
    for (const auto& [t, theta] : loop.clocks()) report += " " + t + "=" + std::to_string(theta);
    spit(base.string() + ".err", report + "\n");
    return 1;
  }
  spit(base.string() + ".jsonl", trace_to_jsonl(loop.grouped_trace()));
  spit(base.string() + ".clocks", clocks_text(loop.clocks()));
  return 0;
}

}  // namespace

SimResult simulate_over_sockets(const KernelProgram& program, const DistributedPlan& plan, std::int64_t tick_limit,
                                const SimOptions& options) {
  char tmpl[] = "/tmp/timetide-XXXXXX";
  if (!::mkdtemp(tmpl)) sys_fail("mkdtemp");
  const std::filesystem::path dir(tmpl);
  std::vector<std::vector<int>> listeners(plan.lanes.size());
  std::vector<std::vector<std::uint16_t>> ports(plan.lanes.size());
  std::vector<int> all_listeners;
  for (std::size_t l = 0; l < plan.lanes.size(); ++l) {
    for (const auto& hop : plan.lanes[l].hops) {
      std::uint16_t port = 0;
      int fd = -1;
      if (hop.remote) {
        fd = listen_loopback(port);
        all_listeners.push_back(fd);
      }
      listeners[l].push_back(fd);
      ports[l].push_back(port);
    }
  }

  const auto start = Clock::now();
  std::vector<pid_t> children;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const pid_t pid = ::fork();
    if (pid < 0) {
      for (pid_t c : children) ::kill(c, SIGKILL);
      sys_fail("fork");
    }
    if (pid == 0) {
      int status = 1;
      try {
        status = node_main(program, plan, i, tick_limit, options, listeners, ports, dir);
      } catch (...) {
      }
      ::_exit(status);
    }
    children.push_back(pid);
  }
  for (int fd : all_listeners) ::close(fd);

  std::vector<int> status(children.size(), -1);
  std::size_t live = children.size();
  const double limit = options.watchdog_seconds > 0 ? options.watchdog_seconds * 2 + 5 : 0;
  bool timed_out = false;
  while (live > 0) {
    int st = 0;
    const pid_t pid = ::waitpid(-1, &st, WNOHANG);
    if (pid > 0) {
      for (std::size_t i = 0; i < children.size(); ++i)
        if (children[i] == pid) status[i] = WIFEXITED(st) ? WEXITSTATUS(st) : 128 + WTERMSIG(st);
      --live;
      const bool failed = WIFEXITED(st) ? WEXITSTATUS(st) != 0 : true;
      if (failed)
        for (std::size_t i = 0; i < children.size(); ++i)
          if (status[i] < 0) ::kill(children[i], SIGKILL);
      continue;
    }
    if (pid < 0 && errno != EINTR) break;
    if (limit > 0 && std::chrono::duration<double>(Clock::now() - start).count() > limit) {
      timed_out = true;
      for (std::size_t i = 0; i < children.size(); ++i)
        if (status[i] < 0) ::kill(children[i], SIGKILL);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  SimResult result;
  result.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  std::string failure = timed_out ? "distributed run exceeded its time limit\n" : "";
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    const auto base = dir / ("node" + std::to_string(i));
    const auto err = base.string() + ".err";
    if (std::filesystem::exists(err)) failure += "node " + plan.nodes[i] + ": " + slurp(err);
    else if (status[i] != 0)
      failure += "node " + plan.nodes[i] + ": exited with status " + std::to_string(status[i]) + "\n";
  }
  if (failure.empty()) {
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
      const auto base = dir / ("node" + std::to_string(i));
      Trace t = trace_from_jsonl(slurp(base.string() + ".jsonl"));
      for (const auto& [th, theta] : parse_clocks(slurp(base.string() + ".clocks"))) result.clocks[th] = theta;
      result.merged.insert(result.merged.end(), t.begin(), t.end());
      result.node_traces[plan.nodes[i]] = std::move(t);
    }
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  if (!failure.empty()) throw RuntimeError(failure);
  return result;
}

}  // namespace timetide::detail
