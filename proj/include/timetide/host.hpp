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

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "timetide/value.hpp"

namespace timetide {

struct HostFunction {
  std::function<Value(const std::vector<Value>&)> fn;
  int arity = -1;  // -1 accepts any count
  bool pure = true;
};

/// Registered external calls. Programs may only call names present here.
class HostTable {
 public:
  void add(const std::string& name, int arity, std::function<Value(const std::vector<Value>&)> fn, bool pure = true);
  const HostFunction* find(const std::string& name) const;
  Value call(const std::string& name, const std::vector<Value>& args) const;
  std::vector<std::string> names() const;
  bool all_pure() const;

  /// Numeric helpers plus the functions used by the example corpus.
  static const HostTable& standard();

 private:
  std::map<std::string, HostFunction> fns_;
};

}  // namespace timetide
