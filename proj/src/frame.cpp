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

#include "timetide/frame.hpp"

namespace timetide {

void encode_frame(const Value& frame, std::vector<std::uint8_t>& out) {
  if (frame.is_empty()) {
    out.push_back(kFrameEmpty);
    return;
  }
  out.push_back(kFramePayload);
  const std::size_t len_at = out.size();
  out.resize(out.size() + 4);
  const std::size_t body_at = out.size();
  encode_value(frame, out);
  const auto len = static_cast<std::uint32_t>(out.size() - body_at);
  for (int i = 0; i < 4; ++i) out[len_at + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(len >> (8 * i));
}

std::vector<std::uint8_t> encode_frame(const Value& frame) {
  std::vector<std::uint8_t> out;
  encode_frame(frame, out);
  return out;
}

Value decode_frame(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos >= bytes.size()) throw FrameError("truncated frame: missing tag");
  const std::uint8_t tag = bytes[pos++];
  if (tag == kFrameEmpty) return Value();
  if (tag != kFramePayload) throw FrameError("unknown frame tag " + std::to_string(tag));
  if (bytes.size() - pos < 4) throw FrameError("truncated frame: missing length");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
  pos += 4;
  if (bytes.size() - pos < len) throw FrameError("truncated frame: body shorter than length");
  std::size_t inner = 0;
  Value v;
  try {
    v = decode_value(bytes.subspan(pos, len), inner);
  } catch (const ValueError& e) {
    throw FrameError(std::string("malformed frame body: ") + e.what());
  }
  if (inner != len) throw FrameError("frame length does not match its body");
  if (v.is_empty()) throw FrameError("payload frame carries an empty value");
  pos += len;
  return v;
}

Value decode_frame(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  Value v = decode_frame(bytes, pos);
  if (pos != bytes.size()) throw FrameError("trailing bytes after frame");
  return v;
}

void Notifier::notify() {
  bool wake;
  {
    std::lock_guard<std::mutex> lock(mu_);
    ++pending_;
    wake = waiting_;
  }
  if (wake) cv_.notify_all();
}

void Notifier::wait_until(std::chrono::steady_clock::time_point deadline) {
  std::unique_lock<std::mutex> lock(mu_);
  waiting_ = true;
  cv_.wait_until(lock, deadline, [&] { return pending_ > 0; });
  waiting_ = false;
  pending_ = 0;
}

void FrameQueue::push(Value v, Clock::time_point ready) {
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !capacity_ || q_.size() < *capacity_; });
    q_.emplace_back(std::move(v), ready);
  }
  cv_.notify_all();
  if (consumer_) consumer_->notify();
}

bool FrameQueue::try_push(Value v, Clock::time_point ready) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (capacity_ && q_.size() >= *capacity_) return false;
    q_.emplace_back(std::move(v), ready);
  }
  cv_.notify_all();
  if (consumer_) consumer_->notify();
  return true;
}

void FrameQueue::fill(const std::deque<Value>& tokens) {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& t : tokens) q_.emplace_back(t, Clock::time_point{});
}

bool FrameQueue::has_space() const {
  std::lock_guard<std::mutex> lock(mu_);
  return !capacity_ || q_.size() < *capacity_;
}

void FrameQueue::close() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
  if (consumer_) consumer_->notify();
}

bool FrameQueue::poppable(Clock::time_point now) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (q_.empty()) return closed_;
  return q_.front().second <= now;
}

std::optional<FrameQueue::Clock::time_point> FrameQueue::head_ready() const {
  std::lock_guard<std::mutex> lock(mu_);
  if (q_.empty()) return std::nullopt;
  return q_.front().second;
}

Value FrameQueue::pop() {
  Value v;
  {
    std::unique_lock<std::mutex> lock(mu_);
    for (;;) {
      if (q_.empty()) {
        if (closed_) return Value();
        cv_.wait(lock);
        continue;
      }
      const auto ready = q_.front().second;
      if (ready > Clock::now()) {
        cv_.wait_until(lock, ready);
        continue;
      }
      break;
    }
    v = std::move(q_.front().first);
    q_.pop_front();
  }
  cv_.notify_all();
  if (producer_) producer_->notify();
  if (pop_hook_) pop_hook_();
  return v;
}

std::optional<Value> FrameQueue::try_pop(Clock::time_point now) {
  Value v;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (q_.empty()) {
      if (closed_) return Value();
      return std::nullopt;
    }
    if (q_.front().second > now) return std::nullopt;
    v = std::move(q_.front().first);
    q_.pop_front();
  }
  cv_.notify_all();
  if (producer_) producer_->notify();
  if (pop_hook_) pop_hook_();
  return v;
}

std::size_t FrameQueue::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return q_.size();
}

bool FrameQueue::closed() const {
  std::lock_guard<std::mutex> lock(mu_);
  return closed_;
}

bool FrameQueue::drained() const {
  std::lock_guard<std::mutex> lock(mu_);
  return closed_ && q_.empty();
}

std::deque<Value> init_channel(std::int64_t delta_effective, const Value& initial) {
  std::deque<Value> q(static_cast<std::size_t>(std::max<std::int64_t>(delta_effective, 0)));
  if (!q.empty()) q.front() = initial;
  return q;
}

}  // namespace timetide
