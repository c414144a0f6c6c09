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

// Anomaly-pattern grammar, validation and the built-in pattern catalog.
//
// A pattern is a total order of operations over versioned variables, written
// as a concatenation of tokens:
//
//   R<t>[<v><k>]   transaction t reads version k of variable v
//   W<t>[<v><k>]   transaction t installs version k of variable v
//   C<t>           transaction t commits
//   A<t>           transaction t aborts (rolls back)
//
// e.g. the lost update is "R1[x0]W2[x1]C2W1[x2]C1". Whitespace is ignored.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "txpat/isolation.hpp"

namespace txpat {

enum class OpKind : std::uint8_t { Read, Write, Commit, Abort };

char op_letter(OpKind kind);

struct PatternOp {
  OpKind kind = OpKind::Read;
  int txn = 1;
  std::string var;  // empty for Commit/Abort
  int version = 0;  // 0 for Commit/Abort

  bool is_data() const { return kind == OpKind::Read || kind == OpKind::Write; }
  bool is_terminal() const { return !is_data(); }

  friend bool operator==(const PatternOp&, const PatternOp&) = default;
};

using LevelSet = std::set<IsolationLevel>;

struct AnomalyPattern {
  std::string id;
  std::vector<PatternOp> ops;
  LevelSet disallowed;

  /// Number of transactions T; valid patterns use exactly {1..T}.
  int txn_count() const;
  /// Distinct variables in first-appearance order.
  std::vector<std::string> variables() const;
};

class PatternSyntaxError : public std::runtime_error {
 public:
  PatternSyntaxError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class PatternValidationError : public std::runtime_error {
 public:
  PatternValidationError(const std::string& what, std::size_t op_index)
      : std::runtime_error(what), op_index_(op_index) {}
  /// Index into AnomalyPattern::ops of the first offending operation.
  std::size_t op_index() const noexcept { return op_index_; }

 private:
  std::size_t op_index_;
};

/// Parses and validates a pattern string. The disallowed set is left empty.
AnomalyPattern parse_pattern(std::string_view text);

/// Throws PatternValidationError on the first violated invariant.
void validate_pattern(const AnomalyPattern& pattern);

std::string format_pattern(const AnomalyPattern& pattern);

/// The 6 common and 40 extended patterns, validated at first use.
const std::vector<AnomalyPattern>& builtin_catalog();
/// Copy of builtin_catalog().
std::vector<AnomalyPattern> load_builtin_catalog();

const AnomalyPattern* find_pattern(std::span<const AnomalyPattern> catalog, std::string_view id);

/// True iff `level` is one of the levels that must prevent the pattern.
bool is_violation(const AnomalyPattern& pattern, IsolationLevel level);

/// "RC, RR, SER" or "ALL" (ALL = every level).
LevelSet parse_level_set(std::string_view text);
std::string format_level_set(const LevelSet& levels);

/// Catalog file: `<id> TAB <pattern> TAB <levels|ALL>` per line, `#` comments.
std::vector<AnomalyPattern> parse_catalog(std::istream& in);
std::vector<AnomalyPattern> load_catalog_file(const std::string& path);
void write_catalog(std::ostream& out, std::span<const AnomalyPattern> catalog);

}  // namespace txpat
