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

#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace txpat {

enum class DataType : std::uint8_t { Int, Text, Bool };

std::string_view to_string(DataType type);

/// A SQL scalar: NULL, 64-bit integer, text or boolean.
class Value {
 public:
  Value() = default;
  Value(std::int64_t v) : v_(v) {}  // NOLINT(google-explicit-constructor)
  Value(int v) : v_(static_cast<std::int64_t>(v)) {}  // NOLINT
  Value(bool v) : v_(v) {}  // NOLINT
  Value(std::string v) : v_(std::move(v)) {}  // NOLINT
  Value(const char* v) : v_(std::string(v)) {}  // NOLINT

  static Value null() { return Value(); }

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }

  /// Integer view of INT and BOOL values; nullopt for NULL and TEXT.
  std::optional<std::int64_t> numeric() const;
  /// Truth value under SQL rules; nullopt for NULL.
  std::optional<bool> truth() const;

  /// SQL literal: 42, 'it''s', TRUE, NULL.
  std::string to_sql() const;
  /// Plain rendering for result display: 42, it's, 1, NULL.
  std::string to_display() const;

  /// Total order used for ORDER BY and set membership: NULL first, then
  /// numbers (bool as 0/1), then text.
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);
  friend bool operator==(const Value& a, const Value& b) { return (a <=> b) == 0; }

 private:
  std::variant<std::monostate, std::int64_t, std::string, bool> v_;
};

/// SQL comparison: nullopt when either side is NULL.
std::optional<int> sql_compare(const Value& a, const Value& b);

/// True when a value of `v`'s type may be stored in a column of `type`.
bool type_accepts(DataType type, const Value& v);

}  // namespace txpat
