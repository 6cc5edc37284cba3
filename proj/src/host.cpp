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

#include "timetide/host.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace timetide {

void HostTable::add(const std::string& name, int arity, std::function<Value(const std::vector<Value>&)> fn,
                    bool pure) {
  fns_[name] = HostFunction{std::move(fn), arity, pure};
}

const HostFunction* HostTable::find(const std::string& name) const {
  auto it = fns_.find(name);
  return it == fns_.end() ? nullptr : &it->second;
}

Value HostTable::call(const std::string& name, const std::vector<Value>& args) const {
  const HostFunction* f = find(name);
  if (!f) throw ValueError("unknown host function '" + name + "'");
  if (f->arity >= 0 && static_cast<int>(args.size()) != f->arity)
    throw ValueError("host function '" + name + "' expects " + std::to_string(f->arity) + " argument(s), got " +
                     std::to_string(args.size()));
  return f->fn(args);
}

std::vector<std::string> HostTable::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : fns_) out.push_back(k);
  return out;
}

bool HostTable::all_pure() const {
  return std::all_of(fns_.begin(), fns_.end(), [](const auto& kv) { return kv.second.pure; });
}

namespace {

void need(bool ok, const std::string& fn, const char* what) {
  if (!ok) throw ValueError(fn + ": " + what);
}

const Record& rec(const Value& v, const std::string& type, const std::string& fn) {
  need(!v.is_empty(), fn, "empty frame argument");
  need(v.is_record() && v.as_record().type == type, fn, "unexpected argument type");
  return v.as_record();
}

std::int64_t num(const Value& v, const std::string& fn) {
  need(v.is_int(), fn, v.is_empty() ? "empty frame argument" : "expected int");
  return v.as_int();
}

// Order: trader, seq, side (+1 buy, -1 sell), price, qty
Value make_order(std::int64_t trader, std::int64_t seq, std::int64_t side, std::int64_t price, std::int64_t qty) {
  return Record{"Order", {trader, seq, side, price, qty}};
}

constexpr std::size_t kBookDepth = 6;

// OrderBook: traders, bids, asks, ordered[], filled[], last_seq[]
Value create_orderbook(const std::vector<Value>& a) {
  std::int64_t n = num(a[0], "create_orderbook");
  need(n > 0, "create_orderbook", "trader count must be positive");
  Array zeros(static_cast<std::size_t>(n), Value(std::int64_t{0}));
  Array seqs(static_cast<std::size_t>(n), Value(std::int64_t{-1}));
  return Record{"OrderBook", {n, Array{}, Array{}, zeros, zeros, seqs}};
}

Value insert_order(const std::vector<Value>& a) {
  Record book = rec(a[0], "OrderBook", "insert_order");
  const Record& o = rec(a[1], "Order", "insert_order");
  std::int64_t trader = o.fields[0].as_int();
  need(trader >= 0 && trader < book.fields[0].as_int(), "insert_order", "trader out of range");
  auto t = static_cast<std::size_t>(trader);
  Array side = book.fields[o.fields[2].as_int() > 0 ? 1 : 2].as_array();
  side.push_back(a[1]);
  if (side.size() > kBookDepth) side.erase(side.begin());
  book.fields[o.fields[2].as_int() > 0 ? 1 : 2] = side;
  Array ordered = book.fields[3].as_array();
  ordered[t] = ordered[t].as_int() + o.fields[4].as_int();
  book.fields[3] = ordered;
  Array seqs = book.fields[5].as_array();
  seqs[t] = o.fields[1];
  book.fields[5] = seqs;
  return book;
}

std::size_t best(const Array& side, bool bids) {
  std::size_t pick = 0;
  for (std::size_t i = 1; i < side.size(); ++i) {
    std::int64_t p = side[i].as_record().fields[3].as_int();
    std::int64_t q = side[pick].as_record().fields[3].as_int();
    if (bids ? p > q : p < q) pick = i;
  }
  return pick;
}

Value run_matching(const std::vector<Value>& a) {
  Record book = rec(a[0], "OrderBook", "run_matching");
  Array bids = book.fields[1].as_array();
  Array asks = book.fields[2].as_array();
  Array filled = book.fields[4].as_array();
  while (!bids.empty() && !asks.empty()) {
    std::size_t bi = best(bids, true), ai = best(asks, false);
    Record b = bids[bi].as_record(), s = asks[ai].as_record();
    if (b.fields[3].as_int() < s.fields[3].as_int()) break;
    std::int64_t q = std::min(b.fields[4].as_int(), s.fields[4].as_int());
    for (const Record* r : {&b, &s}) {
      auto t = static_cast<std::size_t>(r->fields[0].as_int());
      filled[t] = filled[t].as_int() + q;
    }
    b.fields[4] = b.fields[4].as_int() - q;
    s.fields[4] = s.fields[4].as_int() - q;
    if (b.fields[4].as_int() == 0) bids.erase(bids.begin() + static_cast<std::ptrdiff_t>(bi));
    else bids[bi] = b;
    if (s.fields[4].as_int() == 0) asks.erase(asks.begin() + static_cast<std::ptrdiff_t>(ai));
    else asks[ai] = s;
  }
  book.fields[1] = bids;
  book.fields[2] = asks;
  book.fields[4] = filled;
  return book;
}

// Fill: trader, last_seq, filled_total, ordered_total
Value get_fills(const std::vector<Value>& a) {
  const Record& book = rec(a[0], "OrderBook", "get_fills");
  std::int64_t i = num(a[1], "get_fills");
  need(i >= 0 && i < book.fields[0].as_int(), "get_fills", "trader out of range");
  auto t = static_cast<std::size_t>(i);
  return Record{"Fill",
                {i, book.fields[5].as_array()[t], book.fields[4].as_array()[t], book.fields[3].as_array()[t]}};
}

// Spread: best bid, best ask (0 when that side is empty)
Value get_spread(const std::vector<Value>& a) {
  const Record& book = rec(a[0], "OrderBook", "get_spread");
  const Array& bids = book.fields[1].as_array();
  const Array& asks = book.fields[2].as_array();
  std::int64_t bid = bids.empty() ? 0 : bids[best(bids, true)].as_record().fields[3].as_int();
  std::int64_t ask = asks.empty() ? 0 : asks[best(asks, false)].as_record().fields[3].as_int();
  return Record{"Spread", {bid, ask}};
}

// OrderList: trader, next_seq, ordered_total
Value orderlist_create(const std::vector<Value>& a) {
  return Record{"OrderList", {num(a[0], "OrderList_create"), std::int64_t{0}, std::int64_t{0}}};
}

Value record_order(const std::vector<Value>& a) {
  Record list = rec(a[0], "OrderList", "record_order");
  const Record& o = rec(a[1], "Order", "record_order");
  list.fields[1] = o.fields[1].as_int() + 1;
  list.fields[2] = list.fields[2].as_int() + o.fields[4].as_int();
  return list;
}

Value update_orders(const std::vector<Value>& a) {
  if (a[0].is_empty()) return 0.0;
  const Record& f = rec(a[0], "Fill", "update_orders");
  rec(a[1], "OrderList", "update_orders");
  double filled = static_cast<double>(f.fields[2].as_int());
  double open = static_cast<double>(f.fields[3].as_int()) - filled;
  return filled * 0.25 - open * 0.05;
}

Value make_decision(const std::vector<Value>& a) {
  const Record& list = rec(a[1], "OrderList", "make_decision");
  std::int64_t id = num(a[3], "make_decision");
  std::int64_t mid = 100;
  if (!a[0].is_empty()) {
    const Record& s = rec(a[0], "Spread", "make_decision");
    std::int64_t bid = s.fields[0].as_int(), ask = s.fields[1].as_int();
    if (bid > 0 && ask > 0) mid = (bid + ask) / 2;
    else if (bid > 0) mid = bid;
    else if (ask > 0) mid = ask;
  }
  std::int64_t seq = list.fields[1].as_int();
  std::int64_t side = id % 2 == 0 ? 1 : -1;
  return make_order(id, seq, side, mid + side * (1 + seq % 2), 1 + seq % 3);
}

Value should_do_trade(const std::vector<Value>& a) {
  const Record& o = rec(a[0], "Order", "should_do_trade");
  return o.fields[4].as_int() > 0 && o.fields[3].as_int() % 11 != 0;
}

Value field_of(const std::vector<Value>& a, const std::string& fn, const std::string& type, std::size_t idx) {
  return rec(a[0], type, fn).fields[idx];
}

std::int64_t sensor_reading(std::int64_t id, std::int64_t k) { return (id * 37 + k * 11) % 100; }

Value aggregate_readings(const std::vector<Value>& a) {
  const Value& v = a[0];
  if (v.is_empty()) return std::int64_t{0};
  if (v.is_int()) return v;
  need(v.is_array(), "aggregate_readings", "expected an array");
  std::int64_t sum = 0;
  for (const Value& x : v.as_array())
    if (x.is_int()) sum += x.as_int();
  return sum;
}

Value numeric_min_max(const std::vector<Value>& a, bool take_min, const char* fn) {
  need(!a.empty(), fn, "no arguments");
  Value acc = a[0];
  for (const Value& x : a) {
    need(x.is_number(), fn, x.is_empty() ? "empty frame argument" : "expected a number");
    if (acc.is_int() && x.is_int()) {
      if (take_min ? x.as_int() < acc.as_int() : x.as_int() > acc.as_int()) acc = x;
    } else if (take_min ? x.as_float() < acc.as_float() : x.as_float() > acc.as_float()) {
      acc = x;
    }
  }
  return acc;
}

HostTable build_standard() {
  HostTable t;
  t.add("abs", 1, [](const std::vector<Value>& a) -> Value {
    need(a[0].is_number(), "abs", a[0].is_empty() ? "empty frame argument" : "expected a number");
    if (a[0].is_int()) return static_cast<std::int64_t>(std::llabs(a[0].as_int()));
    return std::fabs(a[0].as_float());
  });
  t.add("min", -1, [](const std::vector<Value>& a) { return numeric_min_max(a, true, "min"); });
  t.add("max", -1, [](const std::vector<Value>& a) { return numeric_min_max(a, false, "max"); });
  t.add("to_float", 1, [](const std::vector<Value>& a) -> Value {
    need(a[0].is_number(), "to_float", "expected a number");
    return a[0].as_float();
  });
  t.add("create_orderbook", 1, create_orderbook);
  t.add("insert_order", 2, insert_order);
  t.add("run_matching", 1, run_matching);
  t.add("get_fills", 2, get_fills);
  t.add("get_spread", 1, get_spread);
  t.add("OrderList_create", 1, orderlist_create);
  t.add("record_order", 2, record_order);
  t.add("update_orders", 3, update_orders);
  t.add("make_decision", 4, make_decision);
  t.add("should_do_trade", 1, should_do_trade);
  t.add("order_seq", 1, [](const std::vector<Value>& a) { return field_of(a, "order_seq", "Order", 1); });
  t.add("last_seq", 1, [](const std::vector<Value>& a) { return field_of(a, "last_seq", "Fill", 1); });
  t.add("filled_total", 1, [](const std::vector<Value>& a) { return field_of(a, "filled_total", "Fill", 2); });
  t.add("ordered_total", 1, [](const std::vector<Value>& a) { return field_of(a, "ordered_total", "Fill", 3); });
  t.add("read_sensor", 2, [](const std::vector<Value>& a) -> Value {
    return sensor_reading(num(a[0], "read_sensor"), num(a[1], "read_sensor"));
  });
  t.add("aggregate_readings", 1, aggregate_readings);
  return t;
}

}  // namespace

const HostTable& HostTable::standard() {
  static const HostTable table = build_standard();
  return table;
}

}  // namespace timetide
