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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "timetide/value.hpp"

namespace timetide {

class FrameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kFrameEmpty = 0x00;
inline constexpr std::uint8_t kFramePayload = 0x01;

/// ⊥ encodes as the EMPTY frame; every other value as a payload frame.
std::vector<std::uint8_t> encode_frame(const Value& frame);
void encode_frame(const Value& frame, std::vector<std::uint8_t>& out);
/// Decodes one frame at `pos`. Throws FrameError on truncation or unknown tag.
Value decode_frame(std::span<const std::uint8_t> bytes, std::size_t& pos);
Value decode_frame(std::span<const std::uint8_t> bytes);

/// Wakes a node loop when one of its queues changes.
class Notifier {
 public:
  void notify();
  /// Waits until notified or `deadline`; returns immediately if a
  /// notification arrived since the last wait.
  void wait_until(std::chrono::steady_clock::time_point deadline);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t pending_ = 0;
  bool waiting_ = false;
};

/// Single-producer single-consumer FIFO of frames. A closed queue yields ⊥
/// once drained. Frames may carry a ready time to model link latency.
class FrameQueue {
 public:
  using Clock = std::chrono::steady_clock;

  explicit FrameQueue(std::optional<std::size_t> capacity = std::nullopt) : capacity_(capacity) {}

  /// Appends initial tokens, ignoring the capacity.
  void fill(const std::deque<Value>& tokens);

  void set_consumer(Notifier* n) { consumer_ = n; }
  void set_producer(Notifier* n) { producer_ = n; }
  /// Runs after every frame removed by pop or try_pop.
  void set_pop_hook(std::function<void()> hook) { pop_hook_ = std::move(hook); }

  /// Blocks while full.
  void push(Value v, Clock::time_point ready = {});
  bool try_push(Value v, Clock::time_point ready = {});
  bool has_space() const;
  void close();

  /// True if pop() would return without blocking at `now`.
  bool poppable(Clock::time_point now) const;
  /// Earliest ready time of the head, if it is waiting on latency.
  std::optional<Clock::time_point> head_ready() const;
  /// Blocking pop; ⊥ once closed and drained.
  Value pop();
  /// Non-blocking pop; nullopt when nothing is ready.
  std::optional<Value> try_pop(Clock::time_point now);

  std::size_t size() const;
  bool closed() const;
  /// Closed and empty: the producer is gone and nothing is left.
  bool drained() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<Value, Clock::time_point>> q_;
  std::optional<std::size_t> capacity_;
  bool closed_ = false;
  Notifier* consumer_ = nullptr;
  Notifier* producer_ = nullptr;
  std::function<void()> pop_hook_;
};

/// δ_eff initial tokens, the first carrying the declared initial value.
std::deque<Value> init_channel(std::int64_t delta_effective, const Value& initial = Value());

}  // namespace timetide
