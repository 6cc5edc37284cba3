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

#include <string>

#include "timetide/value.hpp"

namespace timetide {

/// Operator semantics shared by constant folding and the interpreter.
/// Arithmetic and ordering on ⊥ throw ValueError("empty frame in arithmetic").
Value apply_unary(const std::string& op, const Value& a);
Value apply_binary(const std::string& op, const Value& a, const Value& b);

bool is_logical_op(const std::string& op);

/// Normalizes type spellings (`int`/`integer`, `bool`/`boolean`).
std::string canonical_type(const std::string& name);

}  // namespace timetide
