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
#include <string_view>

#include "timetide/ast.hpp"

namespace timetide {

/// Parses Timetide source. Throws CompileError with located diagnostics.
SurfaceProgram parse_program(std::string_view source);

/// Source text that parses back to the same AST (spans aside).
std::string pretty_print(const SurfaceProgram& program);
std::string pretty_print(const Expr& e);

}  // namespace timetide
