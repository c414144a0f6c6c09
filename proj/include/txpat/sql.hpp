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

// AST, parser and renderer for the SQL subset shared by the generators and
// the reference engine.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "txpat/isolation.hpp"
#include "txpat/value.hpp"

namespace txpat::sql {

class SqlSyntaxError : public std::runtime_error {
 public:
  SqlSyntaxError(const std::string& what, std::size_t position)
      : std::runtime_error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

struct Expr;
struct Select;
using ExprPtr = std::shared_ptr<const Expr>;
using SelectPtr = std::shared_ptr<const Select>;

enum class BinOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge, And, Or, Add, Sub, Mul };
enum class UnOp : std::uint8_t { Not, Neg };

std::string_view to_string(BinOp op);

struct Expr {
  enum class Kind : std::uint8_t { Literal, Column, Unary, Binary, IsNull, InList, InSelect, Call };

  Kind kind = Kind::Literal;
  Value literal;
  std::string qualifier;  // Column
  std::string name;       // Column name or Call function name
  UnOp unop = UnOp::Not;
  BinOp binop = BinOp::Eq;
  bool negated = false;  // IS NOT NULL, NOT IN
  std::vector<ExprPtr> args;
  SelectPtr subquery;
};

ExprPtr make_literal(Value v);
ExprPtr make_column(std::string qualifier, std::string name);
ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_unary(UnOp op, ExprPtr operand);

struct TableRef {
  std::string table;  // empty for a derived table
  SelectPtr derived;
  std::string alias;

  /// Name the table is referred to by in the rest of the statement.
  const std::string& exposed_name() const { return alias.empty() ? table : alias; }
};

enum class JoinType : std::uint8_t { Inner, Left, Right, Cross };

std::string_view to_string(JoinType type);

struct Join {
  JoinType type = JoinType::Inner;
  TableRef ref;
  ExprPtr on;  // null for CROSS JOIN
};

struct SelectItem {
  bool star = false;
  std::string star_qualifier;  // t.* when non-empty
  ExprPtr expr;
  std::string alias;
};

struct OrderItem {
  ExprPtr expr;
  bool desc = false;
};

struct Select {
  std::vector<SelectItem> items;
  std::optional<TableRef> from;
  std::vector<Join> joins;
  ExprPtr where;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
};

struct ForeignKeySpec {
  std::string table;
  std::string column;
};

struct ColumnSpec {
  std::string name;
  DataType type = DataType::Int;
  bool primary_key = false;
  bool not_null = false;
  bool unique = false;
  bool auto_increment = false;
  std::optional<ForeignKeySpec> references;
  std::optional<Value> default_value;
};

struct CreateTable {
  std::string name;
  std::vector<ColumnSpec> columns;
  bool if_not_exists = false;
};

struct Insert {
  std::string table;
  std::vector<std::string> columns;  // empty = all columns in table order
  std::vector<std::vector<ExprPtr>> rows;
};

struct Assignment {
  std::string column;
  ExprPtr value;
};

struct Update {
  std::string table;
  std::vector<Assignment> sets;
  ExprPtr where;
};

struct Delete {
  std::string table;
  ExprPtr where;
};

enum class BeginVariant : std::uint8_t { Begin, StartTransaction, ConsistentSnapshot };

std::string_view to_sql(BeginVariant v);

struct BeginStmt {
  BeginVariant variant = BeginVariant::Begin;
};
struct CommitStmt {};
struct RollbackStmt {};

struct SetIsolation {
  IsolationLevel level = IsolationLevel::RR;
};

enum class TriggerEvent : std::uint8_t { Insert, Update, Delete };

std::string_view to_string(TriggerEvent e);

struct CreateTrigger {
  std::string name;
  TriggerEvent event = TriggerEvent::Update;
  std::string table;
  std::vector<Insert> body;
};

using Statement = std::variant<CreateTable, CreateTrigger, Insert, Update, Delete, Select, BeginStmt,
                               CommitStmt, RollbackStmt, SetIsolation>;

/// Parses one statement; a trailing ';' is allowed.
Statement parse_statement(std::string_view text);
ExprPtr parse_expression(std::string_view text);

std::string render(const Statement& stmt);
std::string render(const Select& select);
std::string render(const Expr& expr);
std::string render(const CreateTable& ct);
std::string render(const Insert& ins);

/// Base tables referenced anywhere in the statement, including subqueries
/// and derived tables, in first-appearance order.
std::vector<std::string> referenced_tables(const Statement& stmt);
void collect_tables(const Select& select, std::vector<std::string>& out);
void collect_tables(const Expr& expr, std::vector<std::string>& out);

}  // namespace txpat::sql
