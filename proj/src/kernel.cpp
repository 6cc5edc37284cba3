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

#include "timetide/kernel.hpp"

#include <sstream>

#include "timetide/parser.hpp"

namespace timetide {

namespace {

std::shared_ptr<KNode> make(KKind kind) {
  auto n = std::make_shared<KNode>();
  n->kind = kind;
  return n;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t str_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

namespace k {

KTerm nothing() {
  static const KTerm n = make(KKind::kNothing);
  return n;
}

KTerm var_decl(std::string name) {
  auto n = make(KKind::kVarDecl);
  n->name = std::move(name);
  return n;
}

KTerm assign(std::string name, Expr value) {
  auto n = make(KKind::kAssign);
  n->name = std::move(name);
  n->expr = std::move(value);
  return n;
}

KTerm expr(Expr e) {
  auto n = make(KKind::kExpr);
  n->expr = std::move(e);
  return n;
}

KTerm send(Expr target, Expr value) {
  auto n = make(KKind::kSend);
  n->target = std::move(target);
  n->expr = std::move(value);
  return n;
}

KTerm sync(std::int64_t d) {
  auto n = make(KKind::kSync);
  n->amount = d;
  return n;
}

KTerm if_(Expr cond, KTerm then_t, KTerm else_t) {
  auto n = make(KKind::kIf);
  n->expr = std::move(cond);
  n->items = {std::move(then_t), std::move(else_t)};
  return n;
}

KTerm seq(std::vector<KTerm> items) {
  std::vector<KTerm> flat;
  for (auto& t : items) {
    if (t->kind == KKind::kNothing) continue;
    if (t->kind == KKind::kSeq) {
      flat.insert(flat.end(), t->items.begin(), t->items.end());
    } else {
      flat.push_back(std::move(t));
    }
  }
  if (flat.empty()) return nothing();
  if (flat.size() == 1) return flat.front();
  auto n = make(KKind::kSeq);
  n->items = std::move(flat);
  return n;
}

KTerm loop(KTerm body, std::optional<TaskInfo> task) {
  auto n = make(KKind::kLoop);
  n->items = {std::move(body)};
  n->task = std::move(task);
  return n;
}

KTerm abort(Expr cond, std::string label, KTerm body, bool weak, bool immediate) {
  auto n = make(KKind::kAbort);
  n->expr = std::move(cond);
  n->name = std::move(label);
  n->items = {std::move(body)};
  n->weak = weak;
  n->immediate = immediate;
  return n;
}

KTerm checkabort(Expr cond, std::string label) {
  auto n = make(KKind::kCheckAbort);
  n->expr = std::move(cond);
  n->name = std::move(label);
  return n;
}

KTerm complete(std::string label) {
  auto n = make(KKind::kComplete);
  n->name = std::move(label);
  return n;
}

}  // namespace k

std::string print_expr(const Expr& e) { return pretty_print(e); }

namespace {

void print_into(std::ostringstream& out, const KTerm& t, int ind) {
  const std::string pad(static_cast<std::size_t>(ind) * 2, ' ');
  switch (t->kind) {
    case KKind::kNothing:
      out << pad << "nothing;\n";
      break;
    case KKind::kVarDecl:
      out << pad << "var " << t->name << ";\n";
      break;
    case KKind::kAssign:
      out << pad << t->name << " = " << print_expr(t->expr) << ";\n";
      break;
    case KKind::kExpr:
      out << pad << print_expr(t->expr) << ";\n";
      break;
    case KKind::kSend:
      out << pad << "send " << print_expr(t->target) << "(" << print_expr(t->expr) << ");\n";
      break;
    case KKind::kSync:
      out << pad << "sync " << t->amount << ";\n";
      break;
    case KKind::kIf:
      out << pad << "if (" << print_expr(t->expr) << ") then\n";
      print_into(out, t->items[0], ind + 1);
      if (t->items[1]->kind != KKind::kNothing) {
        out << pad << "else\n";
        print_into(out, t->items[1], ind + 1);
      }
      out << pad << "end if;\n";
      break;
    case KKind::kSeq:
      for (const auto& i : t->items) print_into(out, i, ind);
      break;
    case KKind::kLoop:
      out << pad << "loop";
      if (t->task) {
        const auto& ti = *t->task;
        out << "  // task " << ti.label << " period=" << ti.params.period << " duration=" << ti.params.duration
            << " offset=" << ti.params.offset;
        if (ti.replicas > 1) out << " replica=" << ti.replica << "/" << ti.replicas;
      }
      out << "\n";
      print_into(out, t->items[0], ind + 1);
      out << pad << "end loop;\n";
      break;
    case KKind::kAbort:
      out << pad << (t->weak ? "weak abort" : "abort") << (t->immediate ? " immediate" : "") << "\n";
      print_into(out, t->items[0], ind + 1);
      out << pad << "when " << print_expr(t->expr) << " : " << t->name << ";\n";
      break;
    case KKind::kCheckAbort:
      out << pad << "checkabort(" << print_expr(t->expr) << ", " << t->name << ");\n";
      break;
    case KKind::kComplete:
      out << pad << "complete(" << t->name << ");\n";
      break;
  }
}

}  // namespace

std::string print_term(const KTerm& t, int indent) {
  std::ostringstream out;
  print_into(out, t, indent);
  return out.str();
}

bool same_term(const KTerm& a, const KTerm& b) { return print_term(a) == print_term(b); }

std::uint64_t term_hash(const KTerm& t) {
  if (t->hashed) return t->hash_cache;
  std::uint64_t h = static_cast<std::uint64_t>(t->kind) + 1;
  h = mix(h, str_hash(t->name));
  h = mix(h, static_cast<std::uint64_t>(t->amount));
  if (t->kind == KKind::kAssign || t->kind == KKind::kExpr || t->kind == KKind::kSend || t->kind == KKind::kIf ||
      t->kind == KKind::kAbort || t->kind == KKind::kCheckAbort)
    h = mix(h, str_hash(print_expr(t->expr)));
  if (t->kind == KKind::kSend) h = mix(h, str_hash(print_expr(t->target)));
  for (const auto& i : t->items) h = mix(h, term_hash(i));
  t->hash_cache = h;
  t->hashed = true;
  return h;
}

std::optional<std::int64_t> sync_total(const KTerm& t) {
  switch (t->kind) {
    case KKind::kSync:
      return t->amount;
    case KKind::kSeq: {
      std::int64_t total = 0;
      for (const auto& i : t->items) {
        auto s = sync_total(i);
        if (!s) return std::nullopt;
        total += *s;
      }
      return total;
    }
    case KKind::kIf: {
      auto a = sync_total(t->items[0]);
      auto b = sync_total(t->items[1]);
      if (!a || !b || *a != *b) return std::nullopt;
      return a;
    }
    case KKind::kLoop:
    case KKind::kAbort:
      return std::nullopt;
    default:
      return 0;
  }
}

bool always_syncs(const KTerm& t) {
  switch (t->kind) {
    case KKind::kSync:
      return t->amount > 0;
    case KKind::kSeq:
      for (const auto& i : t->items)
        if (always_syncs(i)) return true;
      return false;
    case KKind::kIf:
      return always_syncs(t->items[0]) && always_syncs(t->items[1]);
    case KKind::kLoop:
      return always_syncs(t->items[0]);
    case KKind::kAbort:
      // an abort may exit before its body reaches a sync
      return false;
    default:
      return false;
  }
}

const KThread* KernelProgram::find_thread(const std::string& id) const {
  for (const auto& t : threads)
    if (t.id == id) return &t;
  return nullptr;
}

int KernelProgram::thread_index(const std::string& id) const {
  for (std::size_t i = 0; i < threads.size(); ++i)
    if (threads[i].id == id) return static_cast<int>(i);
  return -1;
}

std::string print_kernel(const KernelProgram& p) {
  std::ostringstream out;
  out << kKernelHeader << "\n";
  for (const auto& [id, c] : p.channels) {
    out << "channel " << id << " : " << (c.elem_type.empty() ? "?" : c.elem_type) << " delay " << c.delta;
    if (!c.initial.is_empty()) out << " = " << to_string(c.initial);
    out << "  // ";
    auto list = [&](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
      return s.empty() ? std::string("-") : s;
    };
    out << list(c.writers) << " -> " << list(c.readers);
    if (c.merge_writers) out << " merged";
    if (c.sink) out << " sink";
    if (!c.tap_of.empty()) out << " tap_of=" << c.tap_of;
    out << "\n";
  }
  for (const auto& t : p.threads) {
    out << "thread " << t.id << ":\n";
    out << print_term(t.body, 1);
  }
  return out.str();
}

}  // namespace timetide
