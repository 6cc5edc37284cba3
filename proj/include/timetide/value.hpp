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

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace timetide {

class Value;

/// The empty frame. Distinct from every typed value, including `false`.
struct Empty {
  bool operator==(const Empty&) const = default;
};

/// Opaque host record. Only host functions look inside `fields`.
struct Record {
  std::string type;
  std::vector<Value> fields;
  bool operator==(const Record&) const;
};

using Array = std::vector<Value>;

class Value {
 public:
  using Storage = std::variant<Empty, std::int64_t, double, bool, Array, Record>;

  Value() = default;
  Value(Empty) {}
  Value(std::int64_t v) : data_(v) {}
  Value(int v) : data_(static_cast<std::int64_t>(v)) {}
  Value(double v) : data_(v) {}
  Value(bool v) : data_(v) {}
  Value(Array v) : data_(std::move(v)) {}
  Value(Record v) : data_(std::move(v)) {}

  bool is_empty() const { return std::holds_alternative<Empty>(data_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_float() const { return std::holds_alternative<double>(data_); }
  bool is_bool() const { return std::holds_alternative<bool>(data_); }
  bool is_array() const { return std::holds_alternative<Array>(data_); }
  bool is_record() const { return std::holds_alternative<Record>(data_); }
  bool is_number() const { return is_int() || is_float(); }

  std::int64_t as_int() const;
  double as_float() const;  // ints widen
  bool as_bool() const;
  const Array& as_array() const;
  const Record& as_record() const;

  const Storage& storage() const { return data_; }
  std::string type_name() const;

  bool operator==(const Value& other) const { return data_ == other.data_; }

 private:
  Storage data_;
};

class ValueError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Human-readable rendering used by the kernel printer and diagnostics.
std::string to_string(const Value& v);

/// JSON form used by traces: ⊥ is null, records are {"type":..,"fields":[..]}.
nlohmann::json to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

/// Canonical binary encoding (little-endian). Appends to `out`.
void encode_value(const Value& v, std::vector<std::uint8_t>& out);
/// Decodes one value starting at `pos`; advances `pos`. Throws ValueError on truncation.
Value decode_value(std::span<const std::uint8_t> bytes, std::size_t& pos);

namespace value_tag {
inline constexpr std::uint8_t kEmpty = 0x00;
inline constexpr std::uint8_t kInt = 0x01;
inline constexpr std::uint8_t kFloat = 0x02;
inline constexpr std::uint8_t kBool = 0x03;
inline constexpr std::uint8_t kArray = 0x04;
inline constexpr std::uint8_t kRecord = 0x05;
}  // namespace value_tag

}  // namespace timetide
