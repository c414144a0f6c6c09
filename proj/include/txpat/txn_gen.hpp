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

// Pattern-guided transaction generation: statement selection, variable
// binding, condition alignment and schedule composition.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "txpat/constraints.hpp"
#include "txpat/pattern.hpp"
#include "txpat/schema.hpp"
#include "txpat/sql_gen.hpp"

namespace txpat {

class PoolExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientRows : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ReproducerParseError : public std::runtime_error {
 public:
  ReproducerParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct VarTarget {
  std::string table;
  std::int64_t row_id = 0;
  /// Versions of the variable the pattern touches, ascending.
  std::vector<int> versions;
  /// The row is created by the case's first write to the variable.
  bool created_by_insert = false;
};

struct VarBinding {
  std::map<std::string, VarTarget> vars;
};

enum class StepRole : std::uint8_t { Set, Begin, Pattern, Script };

struct CaseStep {
  int txn = 0;
  std::string sql;
  StepRole role = StepRole::Script;
  int pattern_op = -1;  // index into the pattern's ops for Pattern steps
};

struct TransactionCase {
  Schema schema;
  std::vector<std::string> init_sql;  // DDL then seed data
  IsolationLevel isolation = IsolationLevel::RR;
  std::vector<CaseStep> steps;  // global schedule order
  std::string pattern_id;
  std::uint64_t seed = 0;
  VarBinding binding;

  int txn_count() const;
  /// Per-transaction statement lists, index 0 = txn 1.
  std::vector<std::vector<std::string>> txns() const;
  /// Transaction index of every step.
  std::vector<int> schedule() const;
};

struct SlotRequirement {
  std::vector<StmtKind> kinds;
  std::string table;  // required table; empty = any
};

/// Reads, then writes (Updates), then rollbacks, then commits for one
/// transaction's statement-type tuple.
std::vector<Statement> select_statements(const std::vector<Statement>& pool,
                                         const StmtTypeConstraint& c, std::uint64_t seed);
/// One statement per slot, in slot order. Commit/Rollback are synthesized.
std::vector<Statement> select_statements(const std::vector<Statement>& pool,
                                         const std::vector<SlotRequirement>& slots, Rng& rng);

/// Binds each variable to a distinct seeded row with recency bias
/// (geometric weight `recency_bias` per step back in insertion order).
VarBinding bind_variables(const Schema& s, const DataAccessConstraint& dac, std::uint64_t seed,
                          double recency_bias = 0.7);

struct ComposeOptions {
  bool emit_set_isolation = true;
  /// Weights of BEGIN, START TRANSACTION, START TRANSACTION WITH CONSISTENT SNAPSHOT.
  std::array<double, 3> begin_weights = {1.0, 1.0, 1.0};
  SqlGenConfig sql;
};

/// `selected[t]` holds txn t's statements in its op order (terminal last).
TransactionCase compose(const std::map<int, std::vector<Statement>>& selected,
                        const VarBinding& binding, const DataAccessConstraint& dac,
                        const ScheduleOrder& schedule, IsolationLevel isolation, const Schema& schema,
                        std::uint64_t seed, const ComposeOptions& opts = {});

struct GenConfig {
  SchemaConfig schema;
  SqlGenConfig sql;
  ComposeOptions compose;
  int pool_size = 40;
  double recency_bias = 0.7;
  double insert_write_probability = 0.25;
  double delete_write_probability = 0.15;
  int max_attempts = 8;
};

/// Full pipeline for one pattern; deterministic in (pattern, level, seed, cfg).
TransactionCase generate_case(const AnomalyPattern& p, IsolationLevel level, std::uint64_t seed,
                              const GenConfig& cfg = {});

/// Reproducer text: `--` header comments, `/*init*/` lines, then one
/// `/*txn N*/` line per step in schedule order.
std::string format_reproducer(const TransactionCase& c);
TransactionCase parse_reproducer(std::string_view text);
TransactionCase load_reproducer(const std::string& path);

/// Statement text up to the first ';' outside quotes.
std::string strip_statement(std::string_view line);

}  // namespace txpat
