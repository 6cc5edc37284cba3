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

#include "timetide/value.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace timetide {

bool Record::operator==(const Record& other) const {
  return type == other.type && fields == other.fields;
}

std::int64_t Value::as_int() const {
  if (auto* p = std::get_if<std::int64_t>(&data_)) return *p;
  throw ValueError("expected int, got " + type_name());
}

double Value::as_float() const {
  if (auto* p = std::get_if<double>(&data_)) return *p;
  if (auto* p = std::get_if<std::int64_t>(&data_)) return static_cast<double>(*p);
  throw ValueError("expected float, got " + type_name());
}

bool Value::as_bool() const {
  if (auto* p = std::get_if<bool>(&data_)) return *p;
  throw ValueError("expected boolean, got " + type_name());
}

const Array& Value::as_array() const {
  if (auto* p = std::get_if<Array>(&data_)) return *p;
  throw ValueError("expected array, got " + type_name());
}

const Record& Value::as_record() const {
  if (auto* p = std::get_if<Record>(&data_)) return *p;
  throw ValueError("expected record, got " + type_name());
}

std::string Value::type_name() const {
  switch (data_.index()) {
    case 0: return "empty";
    case 1: return "int";
    case 2: return "float";
    case 3: return "boolean";
    case 4: return "array";
    default: return std::get<Record>(data_).type;
  }
}

namespace {

std::string float_text(double d) {
  // Shortest text that round-trips; always carries a '.' or exponent.
  std::string s = nlohmann::json(d).dump();
  if (s.find_first_of(".eE") == std::string::npos && s.find_first_of("0123456789") != std::string::npos)
    s += ".0";
  return s;
}

}  // namespace

std::string to_string(const Value& v) {
  struct Visitor {
    std::string operator()(Empty) const { return "_"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return float_text(d); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const Array& a) const {
      std::string s = "[";
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (i) s += ", ";
        s += to_string(a[i]);
      }
      return s + "]";
    }
    std::string operator()(const Record& r) const {
      std::string s = r.type + "{";
      for (std::size_t i = 0; i < r.fields.size(); ++i) {
        if (i) s += ", ";
        s += to_string(r.fields[i]);
      }
      return s + "}";
    }
  };
  return std::visit(Visitor{}, v.storage());
}

nlohmann::json to_json(const Value& v) {
  struct Visitor {
    nlohmann::json operator()(Empty) const { return nullptr; }
    nlohmann::json operator()(std::int64_t i) const { return i; }
    nlohmann::json operator()(double d) const { return d; }
    nlohmann::json operator()(bool b) const { return b; }
    nlohmann::json operator()(const Array& a) const {
      auto j = nlohmann::json::array();
      for (const auto& e : a) j.push_back(to_json(e));
      return j;
    }
    nlohmann::json operator()(const Record& r) const {
      auto fields = nlohmann::json::array();
      for (const auto& e : r.fields) fields.push_back(to_json(e));
      return {{"type", r.type}, {"fields", fields}};
    }
  };
  return std::visit(Visitor{}, v.storage());
}

Value value_from_json(const nlohmann::json& j) {
  if (j.is_null()) return Value{};
  if (j.is_boolean()) return Value(j.get<bool>());
  if (j.is_number_integer()) return Value(j.get<std::int64_t>());
  if (j.is_number_float()) return Value(j.get<double>());
  if (j.is_array()) {
    Array a;
    for (const auto& e : j) a.push_back(value_from_json(e));
    return Value(std::move(a));
  }
  if (j.is_object() && j.contains("type") && j.contains("fields")) {
    Record r{j.at("type").get<std::string>(), {}};
    for (const auto& e : j.at("fields")) r.fields.push_back(value_from_json(e));
    return Value(std::move(r));
  }
  throw ValueError("cannot convert JSON to value: " + j.dump());
}

namespace {

void put_u32(std::uint32_t x, std::vector<std::uint8_t>& out) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void put_u64(std::uint64_t x, std::vector<std::uint8_t>& out) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void need(std::span<const std::uint8_t> b, std::size_t pos, std::size_t n) {
  if (pos + n > b.size()) throw ValueError("truncated value encoding");
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t& pos) {
  need(b, pos, 4);
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
  pos += 4;
  return x;
}

std::uint64_t get_u64(std::span<const std::uint8_t> b, std::size_t& pos) {
  need(b, pos, 8);
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[pos + i]) << (8 * i);
  pos += 8;
  return x;
}

}  // namespace

void encode_value(const Value& v, std::vector<std::uint8_t>& out) {
  struct Visitor {
    std::vector<std::uint8_t>& out;
    void operator()(Empty) const { out.push_back(value_tag::kEmpty); }
    void operator()(std::int64_t i) const {
      out.push_back(value_tag::kInt);
      put_u64(static_cast<std::uint64_t>(i), out);
    }
    void operator()(double d) const {
      out.push_back(value_tag::kFloat);
      put_u64(std::bit_cast<std::uint64_t>(d), out);
    }
    void operator()(bool b) const {
      out.push_back(value_tag::kBool);
      out.push_back(b ? 1 : 0);
    }
    void operator()(const Array& a) const {
      out.push_back(value_tag::kArray);
      put_u32(static_cast<std::uint32_t>(a.size()), out);
      for (const auto& e : a) encode_value(e, out);
    }
    void operator()(const Record& r) const {
      out.push_back(value_tag::kRecord);
      put_u32(static_cast<std::uint32_t>(r.type.size()), out);
      out.insert(out.end(), r.type.begin(), r.type.end());
      put_u32(static_cast<std::uint32_t>(r.fields.size()), out);
      for (const auto& e : r.fields) encode_value(e, out);
    }
  };
  std::visit(Visitor{out}, v.storage());
}

Value decode_value(std::span<const std::uint8_t> b, std::size_t& pos) {
  need(b, pos, 1);
  const std::uint8_t tag = b[pos++];
  switch (tag) {
    case value_tag::kEmpty: return Value{};
    case value_tag::kInt: return Value(static_cast<std::int64_t>(get_u64(b, pos)));
    case value_tag::kFloat: return Value(std::bit_cast<double>(get_u64(b, pos)));
    case value_tag::kBool: {
      need(b, pos, 1);
      return Value(b[pos++] != 0);
    }
    case value_tag::kArray: {
      const std::uint32_t n = get_u32(b, pos);
      Array a;
      a.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) a.push_back(decode_value(b, pos));
      return Value(std::move(a));
    }
    case value_tag::kRecord: {
      const std::uint32_t len = get_u32(b, pos);
      need(b, pos, len);
      Record r{std::string(reinterpret_cast<const char*>(b.data() + pos), len), {}};
      pos += len;
      const std::uint32_t n = get_u32(b, pos);
      for (std::uint32_t i = 0; i < n; ++i) r.fields.push_back(decode_value(b, pos));
      return Value(std::move(r));
    }
    default: {
      std::ostringstream os;
      os << "unknown value tag 0x" << std::hex << static_cast<int>(tag);
      throw ValueError(os.str());
    }
  }
}

}  // namespace timetide
