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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "txpat/engine.hpp"
#include "txpat/sql.hpp"

namespace txpat::engine::detail {

inline constexpr std::int64_t kEpochUs = 1704067200LL * 1000000LL;

class SqlError : public std::runtime_error {
 public:
  SqlError(ErrorClass cls, const std::string& message) : std::runtime_error(message), err{cls, message} {}
  DbError err;
};

enum class TxnState : std::uint8_t { Active, Committed, Aborted };

struct Txn {
  int id = 0;
  int session = 0;
  IsolationLevel level = IsolationLevel::RR;
  TxnState state = TxnState::Active;
  std::int64_t commit_ts = 0;
  std::optional<std::int64_t> snapshot;
  bool autocommit = false;
  std::vector<std::pair<int, std::int64_t>> written;  // (table, rowid)
};

struct Version {
  std::int64_t vers = 0;
  std::vector<Value> values;
  int writer = 0;
  bool deleted = false;
};

struct Row {
  std::int64_t rowid = 0;
  std::vector<Version> chain;  // oldest first
};

struct Table {
  std::string name;
  std::vector<sql::ColumnSpec> columns;
  std::vector<Row> rows;  // rows[rowid - 1]
  std::map<int, std::int64_t> auto_inc;  // column -> last assigned value
  int id_col = -1;
  int vers_col = -1;
  std::vector<sql::CreateTrigger> triggers;

  int column_index(std::string_view name) const;
};

enum class LockMode : std::uint8_t { IS, IX, S, X };

struct LockKey {
  int table = 0;
  std::int64_t rowid = 0;  // 0 = table lock

  friend auto operator<=>(const LockKey&, const LockKey&) = default;
};

struct LockReq {
  LockKey key;
  LockMode mode;
};

enum class ViewMode : std::uint8_t { Dirty, LatestCommitted, Snapshot };

struct ReadView {
  ViewMode mode = ViewMode::LatestCommitted;
  std::int64_t snapshot = 0;
};

struct Session {
  int id = 0;
  bool open = true;
  int txn = 0;
  bool aborted = false;  // statements error until COMMIT/ROLLBACK
  IsolationLevel next_level = IsolationLevel::RR;
  std::optional<sql::Statement> parked;
  std::string parked_text;
  bool was_blocked = false;
  std::set<int> waits_for;
  std::optional<EngineResult> result;
};

struct EngineState;

// Row-shaped data flowing through query evaluation.
struct Tuple {
  std::vector<Value> vals;
  std::vector<TouchedRow> prov;
};

struct Shape {
  struct Src {
    std::string name;
    std::vector<std::string> cols;
    std::size_t off = 0;
  };
  std::vector<Src> srcs;
  std::size_t width = 0;

  void add(std::string name, std::vector<std::string> cols);
};

struct Env {
  const Shape* shape = nullptr;
  const Tuple* tuple = nullptr;
  const Env* parent = nullptr;
};

struct Relation {
  Shape shape;
  std::vector<Tuple> tuples;
};

struct QueryResult {
  std::vector<std::string> columns;
  std::vector<Tuple> rows;
};

/// Per-statement evaluation state.
struct StmtCtx {
  EngineState& db;
  Txn& txn;
  Session& sess;
  ReadView view;
  std::int64_t now = 0;
  bool view_used = false;
  bool ser_locking = false;  // SER read locks and validation apply
  bool point_read = false;   // row S locks instead of table S
  std::vector<LockReq> locks;
  std::vector<TouchedRow> touched;
  std::set<TouchedRow> touched_seen;
  std::set<std::pair<int, std::int64_t>> read_rows;

  StmtCtx(EngineState& d, Txn& t, Session& s) : db(d), txn(t), sess(s) {}

  Value eval(const sql::Expr& e, const Env* env);
  bool eval_true(const sql::ExprPtr& e, const Env* env);
  QueryResult select(const sql::Select& s, const Env* outer);
  void note_read(const TouchedRow& r);

 private:
  Relation from_clause(const sql::Select& s, const Env* outer);
  Relation source(const sql::TableRef& ref, const Env* outer);
  Relation scan(int table, const std::string& exposed);
  Value column(const sql::Expr& e, const Env* env);
  Value call(const sql::Expr& e, const Env* env);
};

struct EngineState {
  FaultSet faults;
  IsolationLevel default_level = IsolationLevel::RR;
  std::vector<Table> tables;
  std::vector<Txn> txns;  // txns[0] is the bootstrap placeholder
  std::map<int, Session> sessions;
  int next_session = 1;
  std::map<LockKey, std::map<int, std::uint8_t>> locks;  // key -> txn -> mode bitmask
  std::int64_t clock = kEpochUs;
  std::int64_t commit_seq = 0;
  std::vector<OpRecord> event_log;

  bool has(Fault f) const { return faults.count(f) > 0; }
  std::int64_t tick() { return ++clock; }

  int table_index(std::string_view name) const;
  const Table& table_or_throw(std::string_view name, int* index = nullptr) const;

  // Visibility.
  bool committed(int writer) const { return txns[static_cast<std::size_t>(writer)].state == TxnState::Committed; }
  std::int64_t commit_ts(int writer) const { return txns[static_cast<std::size_t>(writer)].commit_ts; }
  const Version* own_version(const Row& r, int txn) const;
  const Version* latest_committed(const Row& r) const;
  const Version* visible(const Row& r, const Txn& txn, const ReadView& view) const;
  std::int64_t reported_id(const Table& t, const Row& r, const Version& v) const;

  // Locks.
  std::set<int> conflicts(const std::vector<LockReq>& reqs, int txn) const;
  void acquire(const std::vector<LockReq>& reqs, int txn);
  void release(int txn);
};

}  // namespace txpat::engine::detail
