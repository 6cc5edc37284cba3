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

#include <map>
#include <string>
#include <vector>

#include "timetide/ast.hpp"

namespace timetide {

using ConstArgs = std::map<std::string, Value>;

/// Substitutes `const` declarations and the entry module's `input const`
/// ports. `entry_args` overrides constants of the same name in any module.
/// `input const` ports of other modules are bound at instantiation.
SurfaceProgram resolve_constants(const SurfaceProgram& program, const ConstArgs& entry_args = {});

/// Parses `NAME=value` pairs (int, float or boolean literals).
ConstArgs parse_const_args(const std::vector<std::string>& pairs);

}  // namespace timetide
