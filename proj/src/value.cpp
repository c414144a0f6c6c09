/*
 * Copyright 2026 The txpat Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "txpat/value.hpp"

namespace txpat {

std::string_view to_string(DataType type) {
  switch (type) {
    case DataType::Int: return "INT";
    case DataType::Text: return "TEXT";
    case DataType::Bool: return "BOOLEAN";
  }
  return "?";
}

std::optional<std::int64_t> Value::numeric() const {
  if (is_int()) return as_int();
  if (is_bool()) return as_bool() ? 1 : 0;
  return std::nullopt;
}

std::optional<bool> Value::truth() const {
  if (is_null()) return std::nullopt;
  if (is_bool()) return as_bool();
  if (is_int()) return as_int() != 0;
  // MySQL converts strings to numbers; a non-numeric string is 0.
  const auto& s = as_text();
  try {
    return std::stoll(s) != 0;
  } catch (...) {
    return false;
  }
}

std::string Value::to_sql() const {
  if (is_null()) return "NULL";
  if (is_int()) return std::to_string(as_int());
  if (is_bool()) return as_bool() ? "TRUE" : "FALSE";
  std::string out = "'";
  for (char c : as_text()) {
    if (c == '\'') out += '\'';
    out += c;
  }
  out += '\'';
  return out;
}

std::string Value::to_display() const {
  if (is_null()) return "NULL";
  if (is_int()) return std::to_string(as_int());
  if (is_bool()) return as_bool() ? "1" : "0";
  return as_text();
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  auto rank = [](const Value& v) { return v.is_null() ? 0 : v.is_text() ? 2 : 1; };
  int ra = rank(a);
  int rb = rank(b);
  if (ra != rb) return ra <=> rb;
  if (ra == 0) return std::strong_ordering::equal;
  if (ra == 1) return *a.numeric() <=> *b.numeric();
  return a.as_text().compare(b.as_text()) <=> 0;
}

std::optional<int> sql_compare(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  auto na = a.numeric();
  auto nb = b.numeric();
  if (na && nb) return *na < *nb ? -1 : (*na > *nb ? 1 : 0);
  if (a.is_text() && b.is_text()) {
    int c = a.as_text().compare(b.as_text());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  // Mixed text/number: compare numerically like MySQL.
  auto to_num = [](const Value& v) -> std::int64_t {
    if (auto n = v.numeric()) return *n;
    try {
      return std::stoll(v.as_text());
    } catch (...) {
      return 0;
    }
  };
  auto x = to_num(a);
  auto y = to_num(b);
  return x < y ? -1 : (x > y ? 1 : 0);
}

bool type_accepts(DataType type, const Value& v) {
  if (v.is_null()) return true;
  switch (type) {
    case DataType::Int: return v.is_int() || v.is_bool();
    case DataType::Text: return v.is_text();
    case DataType::Bool: return v.is_bool() || v.is_int();
  }
  return false;
}

}  // namespace txpat
