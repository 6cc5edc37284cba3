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

#include "json.hpp"
#include "timetide/ast.hpp"

namespace timetide {

inline constexpr int kAstFormatVersion = 1;

/// Stable JSON form of a surface program (`--emit ast`).
nlohmann::json ast_to_json(const SurfaceProgram& program, bool with_spans = true);
nlohmann::json expr_to_json(const Expr& e, bool with_spans = true);
nlohmann::json stmt_to_json(const Stmt& s, bool with_spans = true);

}  // namespace timetide
