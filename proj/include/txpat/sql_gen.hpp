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

// Candidate statement generation and WHERE-condition alignment.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "txpat/rng.hpp"
#include "txpat/schema.hpp"
#include "txpat/sql.hpp"

namespace txpat {

enum class StmtKind : std::uint8_t { Select, SelectJoin, Update, Insert, Delete, Commit, Rollback, Begin };

std::string_view to_string(StmtKind kind);
bool is_read_kind(StmtKind kind);
bool is_write_kind(StmtKind kind);

struct Condition {
  enum class Kind : std::uint8_t { ByRowId, ColumnPredicate, Empty };

  Kind kind = Kind::Empty;
  std::string table;  // target table; used as qualifier inside joins
  std::int64_t row_id = 0;
  std::string column;
  sql::BinOp op = sql::BinOp::Eq;
  Value literal;

  static Condition by_row_id(std::string table, std::int64_t id);
  static Condition predicate(std::string table, std::string column, sql::BinOp op, Value literal);
  static Condition empty() { return {}; }

  /// WHERE expression, or null for Empty.
  sql::ExprPtr to_expr(bool qualify) const;
  /// True when a row with the given column values satisfies the condition.
  bool matches(const TableDef& t, const std::vector<Value>& row) const;
};

struct Statement {
  StmtKind kind = StmtKind::Select;
  std::vector<std::string> tables;
  sql::Statement ast;
  Condition where;

  std::string text() const { return sql::render(ast); }
};

class MissingRow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SqlGenConfig {
  double p_id = 0.8;
  double p_empty = 0.05;
  double select_weight = 0.40;
  double join_weight = 0.10;
  double update_weight = 0.25;
  double insert_weight = 0.10;
  double delete_weight = 0.15;
  double order_by_probability = 0.3;
  double limit_probability = 0.1;
};

/// Pool holding at least one Select, Update, Insert and Delete per table
/// (and a join when one exists), topped up to `n` statements.
std::vector<Statement> gen_statement_pool(const Schema& s, std::uint64_t seed, int n,
                                          const SqlGenConfig& cfg = {});

/// Join read over two tables. Pairing priority: the table's FK to the
/// referenced key, then a key referenced by another table's FK, then
/// same-type columns. nullopt when no pairing exists.
std::optional<Statement> gen_join(const Schema& s, std::uint64_t seed);
std::optional<Statement> gen_join(const Schema& s, Rng& rng);

struct ConditionOptions {
  bool for_write = false;           // never Empty; predicates must single out the row
  bool insert_target = false;       // row is created by the case itself
  std::set<std::string> avoid_columns;  // columns modified elsewhere in the case
};

/// Condition targeting `target_row_id` of `table`; see SqlGenConfig for the
/// branch probabilities. Throws MissingRow for unknown rows unless
/// opts.insert_target is set.
Condition gen_condition(const Schema& s, const std::string& table, std::int64_t target_row_id,
                        std::uint64_t seed, const SqlGenConfig& cfg = {},
                        const ConditionOptions& opts = {});
Condition gen_condition(const Schema& s, const std::string& table, std::int64_t target_row_id,
                        Rng& rng, const SqlGenConfig& cfg, const ConditionOptions& opts);

/// Replaces the WHERE clause; throws KindError for non-filtering kinds.
Statement align_condition(const Statement& stmt, const Condition& cond);

/// Copy of an Insert with ID set to `id` and fresh candidate-key values that
/// do not collide with the seed rows.
Statement instantiate_insert(const Statement& stmt, const Schema& s, std::int64_t id, Rng& rng);

Statement make_commit();
Statement make_rollback();

/// Columns assigned by an UPDATE statement.
std::vector<std::string> assigned_columns(const Statement& stmt);

}  // namespace txpat
