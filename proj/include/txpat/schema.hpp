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

// Randomized schemas with ID/VERS tracking columns, FK links and seed data.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "txpat/sql.hpp"
#include "txpat/value.hpp"

namespace txpat {

inline constexpr const char* kIdColumn = "ID";
inline constexpr const char* kVersColumn = "VERS";

struct ForeignKey {
  std::string table;
  std::string column;
};

struct ColumnDef {
  std::string name;
  DataType type = DataType::Int;
  bool primary_key = false;
  bool not_null = false;
  bool unique = false;
  bool auto_increment = false;
  std::optional<ForeignKey> fk;

  bool is_candidate_key() const { return primary_key || unique; }
};

struct TableDef {
  std::string name;
  std::vector<ColumnDef> columns;
  /// Seed rows, values in column order.
  std::vector<std::vector<Value>> rows;

  int column_index(const std::string& column) const;
  const ColumnDef* column(const std::string& name) const;
  /// ID the next inserted row receives.
  std::int64_t next_id() const { return static_cast<std::int64_t>(rows.size()) + 1; }
  /// Seed row with the given ID, or null.
  const std::vector<Value>* row_by_id(std::int64_t id) const;
};

struct FkEdge {
  std::string child_table;
  std::string child_column;
  std::string parent_table;
  std::string parent_column;
};

struct Schema {
  std::vector<TableDef> tables;
  std::vector<FkEdge> fk_edges;
  /// Values inserted into each candidate-key column, keyed by (table, column).
  std::map<std::pair<std::string, std::string>, std::vector<Value>> inserted_keys;

  const TableDef* table(const std::string& name) const;
  TableDef* table(const std::string& name);
  /// True when some FK references a column of `table`.
  bool is_fk_parent(const std::string& table) const;
};

struct SchemaConfig {
  int min_tables = 1;
  int max_tables = 3;
  int min_columns = 1;
  int max_columns = 4;
  int min_rows = 3;
  int max_rows = 10;
  double primary_key_probability = 0.3;
  double auto_increment_probability = 0.3;
  double unique_probability = 0.25;
  double fk_probability = 0.5;
  std::vector<std::string> text_pool = {"amber", "birch", "cedar", "delta", "ember", "flint", "grove", "haze"};
};

/// Generates tables t0..tn-1; FKs only point to earlier tables. Throws
/// std::invalid_argument when the bounds are outside 1-4 tables or 1-6 columns.
Schema gen_schema(std::uint64_t seed, const SchemaConfig& cfg = {});

/// One CREATE TABLE per table, parents first.
std::vector<std::string> emit_ddl(const Schema& s);
sql::CreateTable to_create_table(const TableDef& t);

/// Fills every table with `rows_per_table` rows (IDs 1..n, VERS 0), records
/// inserted key values and returns one multi-row INSERT per table.
std::vector<std::string> gen_seed_data(Schema& s, int rows_per_table, std::uint64_t seed,
                                       const SchemaConfig& cfg = {});

/// Renders the seed rows already stored in `s`.
std::vector<std::string> render_seed_data(const Schema& s);

/// Builds a schema from CREATE TABLE statements (seed rows are not parsed).
Schema schema_from_ddl(const std::vector<std::string>& ddl);

}  // namespace txpat
