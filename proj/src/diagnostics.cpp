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

#include "timetide/diagnostics.hpp"

namespace timetide {

std::string format_diagnostic(const Diagnostic& d, std::string_view file) {
  std::string out(file);
  out += ':' + std::to_string(d.span.line) + ':' + std::to_string(d.span.column) + ": ";
  if (d.severity == Severity::kWarning) out += "warning: ";
  out += d.code + ": " + d.message;
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags)
    if (d.severity == Severity::kError) return true;
  return false;
}

namespace {

std::string summarize(const std::vector<Diagnostic>& diags) {
  if (diags.empty()) return "compile error";
  std::string s = diags.front().code + ": " + diags.front().message;
  if (diags.size() > 1) s += " (+" + std::to_string(diags.size() - 1) + " more)";
  return s;
}

}  // namespace

CompileError::CompileError(std::vector<Diagnostic> diags)
    : std::runtime_error(summarize(diags)), diags_(std::move(diags)) {}

CompileError::CompileError(std::string code, std::string message, SourceSpan span)
    : CompileError(std::vector<Diagnostic>{
          Diagnostic{Severity::kError, std::move(code), std::move(message), span}}) {}

}  // namespace timetide
