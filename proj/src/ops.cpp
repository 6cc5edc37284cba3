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

#include "timetide/ops.hpp"

#include <cmath>

namespace timetide {

namespace {

[[noreturn]] void empty_frame() { throw ValueError("empty frame in arithmetic"); }

void require_number(const std::string& op, const Value& v) {
  if (v.is_empty()) empty_frame();
  if (!v.is_number()) throw ValueError("operator '" + op + "' expects numbers, got " + v.type_name());
}

bool numeric_equal(const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    return a.as_float() == b.as_float();
  }
  return a == b;
}

}  // namespace

bool is_logical_op(const std::string& op) { return op == "and" || op == "or"; }

Value apply_unary(const std::string& op, const Value& a) {
  if (op == "-") {
    require_number(op, a);
    if (a.is_int()) return Value(-a.as_int());
    return Value(-a.as_float());
  }
  if (op == "!") {
    if (a.is_empty()) empty_frame();
    return Value(!a.as_bool());
  }
  throw ValueError("unknown unary operator '" + op + "'");
}

Value apply_binary(const std::string& op, const Value& a, const Value& b) {
  if (op == "==") return Value(numeric_equal(a, b));
  if (op == "!=") return Value(!numeric_equal(a, b));
  if (is_logical_op(op)) {
    if (a.is_empty() || b.is_empty()) empty_frame();
    return Value(op == "and" ? (a.as_bool() && b.as_bool()) : (a.as_bool() || b.as_bool()));
  }
  require_number(op, a);
  require_number(op, b);
  if (op == "<") return Value(a.as_float() < b.as_float());
  if (op == ">") return Value(a.as_float() > b.as_float());
  if (op == "<=") return Value(a.as_float() <= b.as_float());
  if (op == ">=") return Value(a.as_float() >= b.as_float());
  if (a.is_int() && b.is_int()) {
    const std::int64_t x = a.as_int();
    const std::int64_t y = b.as_int();
    if (op == "+") return Value(x + y);
    if (op == "-") return Value(x - y);
    if (op == "*") return Value(x * y);
    if (op == "/" || op == "%") {
      if (y == 0) throw ValueError("division by zero");
      return Value(op == "/" ? x / y : x % y);
    }
  } else {
    const double x = a.as_float();
    const double y = b.as_float();
    if (op == "+") return Value(x + y);
    if (op == "-") return Value(x - y);
    if (op == "*") return Value(x * y);
    if (op == "/") return Value(x / y);
    if (op == "%") return Value(std::fmod(x, y));
  }
  throw ValueError("unknown binary operator '" + op + "'");
}

std::string canonical_type(const std::string& name) {
  if (name == "integer") return "int";
  if (name == "boolean") return "bool";
  return name;
}

}  // namespace timetide
