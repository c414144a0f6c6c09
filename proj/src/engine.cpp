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

#include "txpat/engine.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <functional>

#include "engine_internal.hpp"
#include "txpat/schema.hpp"
#include "txpat/text.hpp"

namespace txpat::engine {

using namespace detail;

namespace {

constexpr std::array<std::string_view, 7> kFaultNames = {
    "ALLOW_DIRTY_READ",          "ALLOW_DIRTY_WRITE", "ALLOW_LOST_UPDATE",       "ALLOW_NON_REPEATABLE_READ",
    "ALLOW_WRITE_SKEW",          "SNAPSHOT_SEES_LATER_COMMITS", "SERIALIZABLE_AS_SNAPSHOT"};

const char* const kSerializationFailure = "could not serialize access due to concurrent update";
const char* const kDeadlock = "Deadlock found when trying to get lock; try restarting transaction";
const char* const kAbortedTxn = "current transaction is aborted, commands ignored until end of transaction block";

// Level rules in force for one transaction.
struct Semantics {
  ViewMode mode = ViewMode::LatestCommitted;
  bool snapshot_on_first_stmt = false;
  bool snapshot_on_first_read = false;
  bool fcw = false;
  bool ser_locking = false;
};

Semantics semantics(const EngineState& st, IsolationLevel level) {
  Semantics s;
  const bool ser_as_rr = level == IsolationLevel::SER && st.has(Fault::SerializableAsSnapshot);
  switch (level) {
    case IsolationLevel::RU: s.mode = ViewMode::Dirty; break;
    case IsolationLevel::RC:
      s.mode = st.has(Fault::AllowDirtyRead) ? ViewMode::Dirty : ViewMode::LatestCommitted;
      break;
    case IsolationLevel::RR:
    case IsolationLevel::SER:
      if (level == IsolationLevel::RR || ser_as_rr) {
        const bool rr_faults = level == IsolationLevel::RR;
        s.mode = rr_faults && st.has(Fault::AllowNonRepeatableRead) ? ViewMode::LatestCommitted
                                                                     : ViewMode::Snapshot;
        s.snapshot_on_first_read = true;
        s.fcw = !(rr_faults && st.has(Fault::AllowLostUpdate));
      } else {
        s.mode = ViewMode::Snapshot;
        s.snapshot_on_first_stmt = true;
        s.fcw = true;
        s.ser_locking = !st.has(Fault::AllowWriteSkew);
      }
      break;
  }
  return s;
}

bool compatible(LockMode held, LockMode req) {
  static constexpr bool m[4][4] = {
      {true, true, true, false}, {true, true, false, false}, {true, false, true, false}, {false, false, false, false}};
  return m[static_cast<int>(held)][static_cast<int>(req)];
}

Value coerce(const sql::ColumnSpec& c, const Value& v) {
  if (v.is_null()) return v;
  switch (c.type) {
    case DataType::Int:
      if (v.is_int()) return v;
      if (v.is_bool()) return Value(static_cast<std::int64_t>(v.as_bool() ? 1 : 0));
      try {
        std::size_t used = 0;
        auto n = std::stoll(v.as_text(), &used);
        if (used == v.as_text().size()) return Value(static_cast<std::int64_t>(n));
      } catch (...) {
      }
      throw SqlError(ErrorClass::Other,
                     "Incorrect integer value: '" + v.to_display() + "' for column '" + c.name + "' at row 1");
    case DataType::Text: return v.is_text() ? v : Value(v.to_display());
    case DataType::Bool:
      if (v.is_bool()) return v;
      if (v.is_int()) return Value(v.as_int() != 0);
      throw SqlError(ErrorClass::Other,
                     "Incorrect boolean value: '" + v.to_display() + "' for column '" + c.name + "' at row 1");
  }
  return v;
}

bool same(const Value& a, const Value& b) {
  auto c = sql_compare(a, b);
  return c && *c == 0;
}

struct PointRead {
  int table = 0;
  std::int64_t id = 0;
};

std::optional<PointRead> point_read_of(const EngineState& st, const sql::Select& s) {
  if (!s.from || s.from->derived || !s.joins.empty() || !s.where) return std::nullopt;
  const auto& w = *s.where;
  if (w.kind != sql::Expr::Kind::Binary || w.binop != sql::BinOp::Eq) return std::nullopt;
  const sql::Expr* col = w.args[0].get();
  const sql::Expr* lit = w.args[1].get();
  if (col->kind != sql::Expr::Kind::Column) std::swap(col, lit);
  if (col->kind != sql::Expr::Kind::Column || lit->kind != sql::Expr::Kind::Literal || !lit->literal.is_int()) {
    return std::nullopt;
  }
  if (!text::iequals(col->name, kIdColumn)) return std::nullopt;
  if (!col->qualifier.empty() && !text::iequals(col->qualifier, s.from->exposed_name())) return std::nullopt;
  int t = st.table_index(s.from->table);
  if (t < 0 || st.tables[static_cast<std::size_t>(t)].id_col < 0) return std::nullopt;
  return PointRead{t, lit->literal.as_int()};
}

}  // namespace

std::string_view to_string(Fault f) { return kFaultNames[static_cast<std::size_t>(f)]; }

std::optional<Fault> parse_fault(std::string_view s) {
  std::string u = text::to_upper(text::trim(s));
  std::replace(u.begin(), u.end(), '-', '_');
  for (std::size_t i = 0; i < kFaultNames.size(); ++i) {
    std::string_view n = kFaultNames[i];
    if (u == n || (n.substr(0, 6) == "ALLOW_" && u == n.substr(6))) return static_cast<Fault>(i);
  }
  return std::nullopt;
}

FaultSet parse_fault_list(std::string_view s) {
  FaultSet out;
  auto t = text::trim(s);
  if (t.empty() || text::iequals(t, "none")) return out;
  for (const auto& part : text::split(t, ',')) {
    if (text::trim(part).empty()) continue;
    auto f = parse_fault(part);
    if (!f) throw std::invalid_argument("unknown fault switch '" + std::string(text::trim(part)) + "'");
    out.insert(*f);
  }
  return out;
}

std::string format_fault_list(const FaultSet& faults) {
  std::vector<std::string> parts;
  for (auto f : faults) parts.emplace_back(to_string(f));
  return text::join(parts, ",");
}

std::string format_datetime_us(std::int64_t us) {
  using namespace std::chrono;
  const std::int64_t secs = us >= 0 ? us / 1000000 : (us - 999999) / 1000000;
  const std::int64_t frac = us - secs * 1000000;
  const sys_seconds tp{seconds{secs}};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d.%06lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()), static_cast<long long>(frac));
  return buf;
}

std::optional<std::int64_t> parse_datetime_us(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  long long frac = 0;
  int used = 0;
  std::string str(s);
  if (std::sscanf(str.c_str(), "%4d-%2d-%2d %2d:%2d:%2d.%6lld%n", &y, &mo, &d, &h, &mi, &se, &frac, &used) != 7 ||
      static_cast<std::size_t>(used) != str.size()) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
  return static_cast<std::int64_t>(tp.time_since_epoch().count()) * 1000000 + frac;
}

namespace detail {

int Table::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::iequals(columns[i].name, name)) return static_cast<int>(i);
  }
  return -1;
}

int EngineState::table_index(std::string_view name) const {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (text::iequals(tables[i].name, name)) return static_cast<int>(i);
  }
  return -1;
}

const Table& EngineState::table_or_throw(std::string_view name, int* index) const {
  int i = table_index(name);
  if (i < 0) throw SqlError(ErrorClass::SemanticError, "Table '" + std::string(name) + "' doesn't exist");
  if (index) *index = i;
  return tables[static_cast<std::size_t>(i)];
}

const Version* EngineState::own_version(const Row& r, int txn) const {
  for (auto it = r.chain.rbegin(); it != r.chain.rend(); ++it) {
    if (it->writer == txn) return &*it;
  }
  return nullptr;
}

const Version* EngineState::latest_committed(const Row& r) const {
  for (auto it = r.chain.rbegin(); it != r.chain.rend(); ++it) {
    if (committed(it->writer)) return &*it;
  }
  return nullptr;
}

const Version* EngineState::visible(const Row& r, const Txn& txn, const ReadView& view) const {
  if (const Version* own = own_version(r, txn.id)) return own->deleted ? nullptr : own;
  const Version* v = nullptr;
  switch (view.mode) {
    case ViewMode::Dirty: v = r.chain.empty() ? nullptr : &r.chain.back(); break;
    case ViewMode::LatestCommitted: v = latest_committed(r); break;
    case ViewMode::Snapshot:
      for (auto it = r.chain.rbegin(); it != r.chain.rend(); ++it) {
        if (committed(it->writer) && commit_ts(it->writer) <= view.snapshot) {
          v = &*it;
          break;
        }
      }
      break;
  }
  return v && !v->deleted ? v : nullptr;
}

std::int64_t EngineState::reported_id(const Table& t, const Row& r, const Version& v) const {
  if (t.id_col >= 0) {
    const Value& id = v.values[static_cast<std::size_t>(t.id_col)];
    if (id.is_int()) return id.as_int();
  }
  return r.rowid;
}

std::set<int> EngineState::conflicts(const std::vector<LockReq>& reqs, int txn) const {
  std::set<int> out;
  for (const auto& r : reqs) {
    auto it = locks.find(r.key);
    if (it == locks.end()) continue;
    for (const auto& [holder, mask] : it->second) {
      if (holder == txn) continue;
      for (int m = 0; m < 4; ++m) {
        if ((mask & (1u << m)) && !compatible(static_cast<LockMode>(m), r.mode)) {
          out.insert(holder);
          break;
        }
      }
    }
  }
  return out;
}

void EngineState::acquire(const std::vector<LockReq>& reqs, int txn) {
  for (const auto& r : reqs) locks[r.key][txn] |= static_cast<std::uint8_t>(1u << static_cast<int>(r.mode));
}

void EngineState::release(int txn) {
  for (auto it = locks.begin(); it != locks.end();) {
    it->second.erase(txn);
    it = it->second.empty() ? locks.erase(it) : std::next(it);
  }
}

// Statement execution. Everything a statement needs before it may block is
// computed first; state changes happen only once all locks are granted.
class Executor {
 public:
  explicit Executor(EngineState& st) : st_(st) {}

  void submit(Session& s, std::string_view sql_text);
  void retry_parked();
  void close(Session& s);

 private:
  EngineState& st_;

  Txn& txn(int id) { return st_.txns[static_cast<std::size_t>(id)]; }
  Session& session_of(int txn_id) { return st_.sessions.at(txn(txn_id).session); }

  Txn& start_txn(Session& s, bool autocommit);
  void commit_txn(int id);
  void rollback_txn(int id);

  /// nullopt = blocked; `holders` receives the conflicting transactions.
  std::optional<EngineResult> attempt(Session& s, const sql::Statement& stmt, const std::string& text,
                                      std::set<int>& holders);
  EngineResult control(Session& s, const sql::Statement& stmt);
  std::optional<EngineResult> data(Session& s, const sql::Statement& stmt, const std::string& text,
                                   std::set<int>& holders);

  bool park(Session& s, std::set<int> holders);
  std::optional<int> deadlock_victim(int start);
  void abort_victim(int victim);

  // DML helpers.
  const Version* write_base(const Row& r, const Txn& t) const;
  std::vector<LockReq> trigger_locks(const Table& t, sql::TriggerEvent ev) const;
  void check_unique(const Table& t, int col, const Value& v, std::int64_t self_rowid) const;
  void check_fk_child(const Txn& txn, const Table& t, int col, const Value& v) const;
  void check_fk_parent(const Table& t, int col, const Value& old_value, std::int64_t self_rowid) const;
  std::int64_t insert_row(StmtCtx& ctx, int table, const std::vector<std::string>& cols,
                          const std::vector<Value>& given);
  void fire(StmtCtx& ctx, int table, sql::TriggerEvent ev, const std::vector<Value>* old_vals,
            const std::vector<Value>* new_vals);
};

Txn& Executor::start_txn(Session& s, bool autocommit) {
  Txn t;
  t.id = static_cast<int>(st_.txns.size());
  t.session = s.id;
  t.level = s.next_level;
  t.autocommit = autocommit;
  st_.txns.push_back(std::move(t));
  s.txn = st_.txns.back().id;
  return st_.txns.back();
}

void Executor::commit_txn(int id) {
  Txn& t = txn(id);
  t.state = TxnState::Committed;
  t.commit_ts = ++st_.commit_seq;
  st_.release(id);
  auto it = st_.sessions.find(t.session);
  if (it != st_.sessions.end() && it->second.txn == id) it->second.txn = 0;
}

void Executor::rollback_txn(int id) {
  Txn& t = txn(id);
  for (const auto& [ti, rowid] : t.written) {
    auto& chain = st_.tables[static_cast<std::size_t>(ti)].rows[static_cast<std::size_t>(rowid) - 1].chain;
    chain.erase(std::remove_if(chain.begin(), chain.end(), [&](const Version& v) { return v.writer == id; }),
                chain.end());
  }
  t.written.clear();
  t.state = TxnState::Aborted;
  st_.release(id);
  auto it = st_.sessions.find(t.session);
  if (it != st_.sessions.end() && it->second.txn == id) it->second.txn = 0;
}

void Executor::submit(Session& s, std::string_view sql_text) {
  if (s.parked) throw std::logic_error("session " + std::to_string(s.id) + " has a statement in flight");
  s.result.reset();
  s.was_blocked = false;
  std::string text(sql_text);
  sql::Statement stmt;
  try {
    stmt = sql::parse_statement(text);
  } catch (const sql::SqlSyntaxError& e) {
    EngineResult r;
    r.error = DbError{ErrorClass::SyntaxError,
                      std::string("You have an error in your SQL syntax; ") + e.what()};
    r.timestamp = st_.tick();
    s.result = std::move(r);
    return;
  }
  std::set<int> holders;
  auto r = attempt(s, stmt, text, holders);
  if (r) {
    s.result = std::move(*r);
  } else {
    s.parked = std::move(stmt);
    s.parked_text = text;
    s.was_blocked = true;
    park(s, std::move(holders));
  }
  retry_parked();
}

bool Executor::park(Session& s, std::set<int> holders) {
  s.waits_for = std::move(holders);
  if (auto v = deadlock_victim(s.txn)) {
    abort_victim(*v);
    return true;
  }
  return false;
}

std::optional<int> Executor::deadlock_victim(int start) {
  std::vector<int> path;
  std::set<int> visited;
  std::optional<int> victim;
  std::function<bool(int)> dfs = [&](int node) -> bool {
    path.push_back(node);
    const Session& s = session_of(node);
    if (s.parked) {
      for (int next : s.waits_for) {
        if (next == start) {
          victim = *std::max_element(path.begin(), path.end());
          return true;
        }
        if (visited.insert(next).second && dfs(next)) return true;
      }
    }
    path.pop_back();
    return false;
  };
  visited.insert(start);
  dfs(start);
  return victim;
}

void Executor::abort_victim(int victim) {
  Session& s = session_of(victim);
  const bool autocommit = txn(victim).autocommit;
  s.parked.reset();
  s.waits_for.clear();
  rollback_txn(victim);
  if (!autocommit) s.aborted = true;
  EngineResult r;
  r.error = DbError{ErrorClass::Deadlock, kDeadlock};
  r.was_blocked = true;
  r.timestamp = st_.tick();
  s.result = std::move(r);
}

void Executor::retry_parked() {
  for (;;) {
    std::vector<Session*> parked;
    for (auto& [id, s] : st_.sessions) {
      if (s.parked) parked.push_back(&s);
    }
    std::sort(parked.begin(), parked.end(), [](const Session* a, const Session* b) { return a->txn < b->txn; });
    bool progress = false;
    for (Session* s : parked) {
      std::set<int> holders;
      auto r = attempt(*s, *s->parked, s->parked_text, holders);
      if (r) {
        r->was_blocked = true;
        s->parked.reset();
        s->waits_for.clear();
        s->result = std::move(*r);
        progress = true;
        break;
      }
      if (park(*s, std::move(holders))) {
        progress = true;
        break;
      }
    }
    if (!progress) return;
  }
}

void Executor::close(Session& s) {
  s.parked.reset();
  s.waits_for.clear();
  if (s.txn) rollback_txn(s.txn);
  s.open = false;
  s.aborted = false;
  retry_parked();
}

std::optional<EngineResult> Executor::attempt(Session& s, const sql::Statement& stmt, const std::string& text,
                                              std::set<int>& holders) {
  const bool is_data = std::holds_alternative<sql::Select>(stmt) || std::holds_alternative<sql::Insert>(stmt) ||
                       std::holds_alternative<sql::Update>(stmt) || std::holds_alternative<sql::Delete>(stmt);
  if (!is_data) return control(s, stmt);
  if (s.aborted) {
    EngineResult r;
    r.error = DbError{ErrorClass::Other, kAbortedTxn};
    r.timestamp = st_.tick();
    return r;
  }
  return data(s, stmt, text, holders);
}

EngineResult Executor::control(Session& s, const sql::Statement& stmt) {
  EngineResult r;
  try {
    if (const auto* b = std::get_if<sql::BeginStmt>(&stmt)) {
      s.aborted = false;
      if (s.txn) commit_txn(s.txn);
      Txn& t = start_txn(s, false);
      if (b->variant == sql::BeginVariant::ConsistentSnapshot) {
        const bool stale = t.level == IsolationLevel::RR && st_.has(Fault::SnapshotSeesLaterCommits);
        if (!stale) t.snapshot = st_.commit_seq;
      }
    } else if (std::holds_alternative<sql::CommitStmt>(stmt)) {
      if (s.aborted) {
        s.aborted = false;
        throw SqlError(ErrorClass::Other, "Transaction was aborted earlier; COMMIT rolled back");
      }
      if (s.txn) commit_txn(s.txn);
    } else if (std::holds_alternative<sql::RollbackStmt>(stmt)) {
      s.aborted = false;
      if (s.txn) rollback_txn(s.txn);
    } else if (const auto* set = std::get_if<sql::SetIsolation>(&stmt)) {
      s.next_level = set->level;
    } else if (const auto* ct = std::get_if<sql::CreateTable>(&stmt)) {
      if (s.txn) commit_txn(s.txn);
      if (st_.table_index(ct->name) >= 0) {
        if (!ct->if_not_exists) throw SqlError(ErrorClass::Other, "Table '" + ct->name + "' already exists");
      } else {
        Table t;
        t.name = ct->name;
        t.columns = ct->columns;
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
          for (std::size_t j = 0; j < i; ++j) {
            if (text::iequals(t.columns[i].name, t.columns[j].name)) {
              throw SqlError(ErrorClass::Other, "Duplicate column name '" + t.columns[i].name + "'");
            }
          }
          if (const auto& ref = t.columns[i].references) {
            const Table& parent = st_.table_or_throw(ref->table);
            if (parent.column_index(ref->column) < 0) {
              throw SqlError(ErrorClass::SemanticError,
                             "Unknown column '" + ref->column + "' in foreign key reference");
            }
          }
        }
        t.id_col = t.column_index(kIdColumn);
        t.vers_col = t.column_index(kVersColumn);
        st_.tables.push_back(std::move(t));
      }
    } else if (const auto* tr = std::get_if<sql::CreateTrigger>(&stmt)) {
      if (s.txn) commit_txn(s.txn);
      int ti = 0;
      st_.table_or_throw(tr->table, &ti);
      for (const auto& ins : tr->body) st_.table_or_throw(ins.table);
      st_.tables[static_cast<std::size_t>(ti)].triggers.push_back(*tr);
    }
  } catch (const SqlError& e) {
    r.error = e.err;
  }
  r.timestamp = st_.tick();
  return r;
}

const Version* Executor::write_base(const Row& r, const Txn& t) const {
  if (st_.has(Fault::AllowDirtyWrite)) return r.chain.empty() ? nullptr : &r.chain.back();
  if (const Version* own = st_.own_version(r, t.id)) return own;
  return st_.latest_committed(r);
}

std::vector<LockReq> Executor::trigger_locks(const Table& t, sql::TriggerEvent ev) const {
  std::vector<LockReq> out;
  for (const auto& tr : t.triggers) {
    if (tr.event != ev) continue;
    for (const auto& ins : tr.body) {
      int ti = st_.table_index(ins.table);
      if (ti >= 0) out.push_back({{ti, 0}, LockMode::IX});
    }
  }
  return out;
}

void Executor::check_unique(const Table& t, int col, const Value& v, std::int64_t self_rowid) const {
  if (v.is_null()) return;
  for (const auto& row : t.rows) {
    if (row.rowid == self_rowid || row.chain.empty()) continue;
    for (const Version* ver : {&row.chain.back(), st_.latest_committed(row)}) {
      if (ver && !ver->deleted && same(ver->values[static_cast<std::size_t>(col)], v)) {
        throw SqlError(ErrorClass::Other, "Duplicate entry '" + v.to_display() + "' for key '" +
                                              t.columns[static_cast<std::size_t>(col)].name + "'");
      }
    }
  }
}

void Executor::check_fk_child(const Txn& tx, const Table& t, int col, const Value& v) const {
  const auto& ref = t.columns[static_cast<std::size_t>(col)].references;
  if (!ref || v.is_null()) return;
  const Table& parent = st_.table_or_throw(ref->table);
  const int pc = parent.column_index(ref->column);
  for (const auto& row : parent.rows) {
    const Version* ver = st_.own_version(row, tx.id);
    if (!ver) ver = st_.latest_committed(row);
    if (ver && !ver->deleted && same(ver->values[static_cast<std::size_t>(pc)], v)) return;
  }
  throw SqlError(ErrorClass::Other, "Cannot add or update a child row: a foreign key constraint fails (`" + t.name +
                                        "`, FOREIGN KEY (`" + t.columns[static_cast<std::size_t>(col)].name +
                                        "`) REFERENCES `" + ref->table + "` (`" + ref->column + "`))");
}

void Executor::check_fk_parent(const Table& t, int col, const Value& old_value, std::int64_t self_rowid) const {
  if (old_value.is_null()) return;
  const std::string& cname = t.columns[static_cast<std::size_t>(col)].name;
  for (const auto& child : st_.tables) {
    for (std::size_t ci = 0; ci < child.columns.size(); ++ci) {
      const auto& ref = child.columns[ci].references;
      if (!ref || !text::iequals(ref->table, t.name) || !text::iequals(ref->column, cname)) continue;
      for (const auto& row : child.rows) {
        if (&child == &t && row.rowid == self_rowid) continue;
        if (row.chain.empty()) continue;
        for (const Version* ver : {&row.chain.back(), st_.latest_committed(row)}) {
          if (ver && !ver->deleted && same(ver->values[ci], old_value)) {
            throw SqlError(ErrorClass::Other,
                           "Cannot delete or update a parent row: a foreign key constraint fails (`" + child.name +
                               "`, FOREIGN KEY (`" + child.columns[ci].name + "`) REFERENCES `" + t.name + "` (`" +
                               cname + "`))");
          }
        }
      }
    }
  }
}

std::int64_t Executor::insert_row(StmtCtx& ctx, int ti, const std::vector<std::string>& cols,
                                  const std::vector<Value>& given) {
  Table& t = st_.tables[static_cast<std::size_t>(ti)];
  std::vector<Value> vals(t.columns.size());
  std::vector<bool> set(t.columns.size(), false);
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i].default_value) vals[i] = *t.columns[i].default_value;
  }
  for (std::size_t i = 0; i < cols.size(); ++i) {
    int c = t.column_index(cols[i]);
    vals[static_cast<std::size_t>(c)] = coerce(t.columns[static_cast<std::size_t>(c)], given[i]);
    set[static_cast<std::size_t>(c)] = true;
  }
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (!t.columns[i].auto_increment) continue;
    auto& counter = t.auto_inc[static_cast<int>(i)];
    if (vals[i].is_null() || (vals[i].is_int() && vals[i].as_int() == 0)) {
      vals[i] = Value(++counter);
    } else if (vals[i].is_int()) {
      counter = std::max(counter, vals[i].as_int());
    }
  }
  if (t.id_col >= 0 && vals[static_cast<std::size_t>(t.id_col)].is_null() && !set[static_cast<std::size_t>(t.id_col)]) {
    std::int64_t max_id = 0;
    for (const auto& row : t.rows) {
      for (const auto& ver : row.chain) {
        const Value& id = ver.values[static_cast<std::size_t>(t.id_col)];
        if (id.is_int()) max_id = std::max(max_id, id.as_int());
      }
    }
    vals[static_cast<std::size_t>(t.id_col)] = Value(max_id + 1);
  }
  if (t.vers_col >= 0) vals[static_cast<std::size_t>(t.vers_col)] = Value(std::int64_t{0});
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    const auto& c = t.columns[i];
    if (vals[i].is_null() && (c.not_null || c.primary_key)) {
      throw SqlError(ErrorClass::Other, "Column '" + c.name + "' cannot be null");
    }
    if (c.primary_key || c.unique) check_unique(t, static_cast<int>(i), vals[i], 0);
    check_fk_child(ctx.txn, t, static_cast<int>(i), vals[i]);
  }
  Row row;
  row.rowid = static_cast<std::int64_t>(t.rows.size()) + 1;
  row.chain.push_back(Version{0, vals, ctx.txn.id, false});
  t.rows.push_back(std::move(row));
  ctx.txn.written.emplace_back(ti, t.rows.back().rowid);
  return t.rows.back().rowid;
}

void Executor::fire(StmtCtx& ctx, int ti, sql::TriggerEvent ev, const std::vector<Value>* old_vals,
                    const std::vector<Value>* new_vals) {
  const Table& t = st_.tables[static_cast<std::size_t>(ti)];
  if (t.triggers.empty()) return;
  std::vector<std::string> cols;
  for (const auto& c : t.columns) cols.push_back(c.name);
  Shape shape;
  Tuple tup;
  if (new_vals) {
    shape.add("NEW", cols);
    tup.vals.insert(tup.vals.end(), new_vals->begin(), new_vals->end());
  }
  if (old_vals) {
    shape.add("OLD", cols);
    tup.vals.insert(tup.vals.end(), old_vals->begin(), old_vals->end());
  }
  Env env{&shape, &tup, nullptr};
  const auto triggers = t.triggers;
  for (const auto& tr : triggers) {
    if (tr.event != ev) continue;
    for (const auto& ins : tr.body) {
      int target = 0;
      const Table& tt = st_.table_or_throw(ins.table, &target);
      std::vector<std::string> icols = ins.columns;
      if (icols.empty()) {
        for (const auto& c : tt.columns) icols.push_back(c.name);
      }
      for (const auto& r : ins.rows) {
        std::vector<Value> given;
        for (const auto& e : r) given.push_back(ctx.eval(*e, &env));
        if (given.size() != icols.size()) {
          throw SqlError(ErrorClass::Other, "Column count doesn't match value count at row 1");
        }
        insert_row(ctx, target, icols, given);
      }
    }
  }
}

std::optional<EngineResult> Executor::data(Session& s, const sql::Statement& stmt, const std::string& text,
                                           std::set<int>& holders) {
  const bool implicit = s.txn == 0;
  Txn& tx = implicit ? start_txn(s, true) : txn(s.txn);
  const int txn_id = tx.id;
  const Semantics sem = semantics(st_, tx.level);
  const std::int64_t snap = tx.snapshot.value_or(st_.commit_seq);

  StmtCtx ctx(st_, tx, s);
  ctx.view = ReadView{sem.mode, snap};
  ctx.now = st_.tick();
  ctx.ser_locking = sem.ser_locking;

  EngineResult r;
  std::vector<TouchedRow> writes;
  bool is_write = false;
  try {
    if (const auto* sel = std::get_if<sql::Select>(&stmt)) {
      auto point = sem.ser_locking ? point_read_of(st_, *sel) : std::nullopt;
      ctx.point_read = point.has_value();
      auto qr = ctx.select(*sel, nullptr);
      for (const auto& row : qr.rows) {
        for (const auto& p : row.prov) ctx.note_read(p);
      }
      if (point) {
        ctx.locks.push_back({{point->table, 0}, LockMode::IS});
        const Table& t = st_.tables[static_cast<std::size_t>(point->table)];
        std::set<std::pair<int, std::int64_t>> keep;
        for (const auto& row : t.rows) {
          const bool hit = std::any_of(row.chain.begin(), row.chain.end(), [&](const Version& v) {
            const Value& id = v.values[static_cast<std::size_t>(t.id_col)];
            return id.is_int() && id.as_int() == point->id;
          });
          if (!hit) continue;
          ctx.locks.push_back({{point->table, row.rowid}, LockMode::S});
          if (ctx.read_rows.count({point->table, row.rowid})) keep.insert({point->table, row.rowid});
        }
        ctx.read_rows = std::move(keep);
      }
      holders = st_.conflicts(ctx.locks, txn_id);
      if (!holders.empty()) return std::nullopt;
      st_.acquire(ctx.locks, txn_id);
      r.result.columns = std::move(qr.columns);
      for (auto& row : qr.rows) r.result.rows.push_back(std::move(row.vals));
    } else if (const auto* up = std::get_if<sql::Update>(&stmt)) {
      is_write = true;
      int ti = 0;
      st_.table_or_throw(up->table, &ti);
      Table& t = st_.tables[static_cast<std::size_t>(ti)];
      std::vector<int> set_cols;
      for (const auto& a : up->sets) {
        int c = t.column_index(a.column);
        if (c < 0) throw SqlError(ErrorClass::SemanticError, "Unknown column '" + a.column + "' in 'field list'");
        set_cols.push_back(c);
      }
      std::vector<std::string> cols;
      for (const auto& c : t.columns) cols.push_back(c.name);
      Shape shape;
      shape.add(t.name, cols);
      std::vector<std::int64_t> targets;
      for (const auto& row : t.rows) {
        const Version* base = write_base(row, tx);
        if (!base || base->deleted) continue;
        Tuple tup{base->values, {}};
        Env env{&shape, &tup, nullptr};
        if (ctx.eval_true(up->where, &env)) targets.push_back(row.rowid);
      }
      ctx.locks.push_back({{ti, 0}, LockMode::IX});
      if (!st_.has(Fault::AllowDirtyWrite)) {
        for (auto id : targets) ctx.locks.push_back({{ti, id}, LockMode::X});
      }
      for (const auto& l : trigger_locks(t, sql::TriggerEvent::Update)) ctx.locks.push_back(l);
      holders = st_.conflicts(ctx.locks, txn_id);
      if (!holders.empty()) return std::nullopt;
      st_.acquire(ctx.locks, txn_id);
      if (sem.fcw && (tx.snapshot || sem.snapshot_on_first_stmt)) {
        for (auto id : targets) {
          const Version* lc = st_.latest_committed(t.rows[static_cast<std::size_t>(id) - 1]);
          if (lc && lc->writer != txn_id && st_.commit_ts(lc->writer) > snap) {
            throw SqlError(ErrorClass::Other, kSerializationFailure);
          }
        }
      }
      for (auto id : targets) {
        Row& row = st_.tables[static_cast<std::size_t>(ti)].rows[static_cast<std::size_t>(id) - 1];
        const Version base = *write_base(row, tx);
        Tuple tup{base.values, {}};
        Env env{&shape, &tup, nullptr};
        std::vector<Value> vals = base.values;
        for (std::size_t i = 0; i < up->sets.size(); ++i) {
          const auto c = static_cast<std::size_t>(set_cols[i]);
          vals[c] = coerce(t.columns[c], ctx.eval(*up->sets[i].value, &env));
        }
        if (t.vers_col >= 0) vals[static_cast<std::size_t>(t.vers_col)] = Value(base.vers + 1);
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
          if (same(vals[c], base.values[c]) && vals[c].is_null() == base.values[c].is_null()) continue;
          const auto& spec = t.columns[c];
          if (vals[c].is_null() && (spec.not_null || spec.primary_key)) {
            throw SqlError(ErrorClass::Other, "Column '" + spec.name + "' cannot be null");
          }
          if (spec.primary_key || spec.unique) check_unique(t, static_cast<int>(c), vals[c], id);
          check_fk_child(tx, t, static_cast<int>(c), vals[c]);
          if (static_cast<int>(c) != t.vers_col) check_fk_parent(t, static_cast<int>(c), base.values[c], id);
        }
        row.chain.push_back(Version{base.vers + 1, vals, txn_id, false});
        tx.written.emplace_back(ti, id);
        writes.push_back({t.name, st_.reported_id(t, row, row.chain.back()), base.vers + 1, TouchKind::Update});
        fire(ctx, ti, sql::TriggerEvent::Update, &base.values, &vals);
      }
      r.affected = static_cast<std::int64_t>(targets.size());
    } else if (const auto* del = std::get_if<sql::Delete>(&stmt)) {
      is_write = true;
      int ti = 0;
      st_.table_or_throw(del->table, &ti);
      Table& t = st_.tables[static_cast<std::size_t>(ti)];
      std::vector<std::string> cols;
      for (const auto& c : t.columns) cols.push_back(c.name);
      Shape shape;
      shape.add(t.name, cols);
      std::vector<std::int64_t> targets;
      for (const auto& row : t.rows) {
        const Version* base = write_base(row, tx);
        if (!base || base->deleted) continue;
        Tuple tup{base->values, {}};
        Env env{&shape, &tup, nullptr};
        if (ctx.eval_true(del->where, &env)) targets.push_back(row.rowid);
      }
      ctx.locks.push_back({{ti, 0}, LockMode::IX});
      if (!st_.has(Fault::AllowDirtyWrite)) {
        for (auto id : targets) ctx.locks.push_back({{ti, id}, LockMode::X});
      }
      for (const auto& l : trigger_locks(t, sql::TriggerEvent::Delete)) ctx.locks.push_back(l);
      holders = st_.conflicts(ctx.locks, txn_id);
      if (!holders.empty()) return std::nullopt;
      st_.acquire(ctx.locks, txn_id);
      if (sem.fcw && (tx.snapshot || sem.snapshot_on_first_stmt)) {
        for (auto id : targets) {
          const Version* lc = st_.latest_committed(t.rows[static_cast<std::size_t>(id) - 1]);
          if (lc && lc->writer != txn_id && st_.commit_ts(lc->writer) > snap) {
            throw SqlError(ErrorClass::Other, kSerializationFailure);
          }
        }
      }
      for (auto id : targets) {
        Row& row = st_.tables[static_cast<std::size_t>(ti)].rows[static_cast<std::size_t>(id) - 1];
        const Version base = *write_base(row, tx);
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
          if (t.columns[c].primary_key || t.columns[c].unique) check_fk_parent(t, static_cast<int>(c), base.values[c], id);
        }
        std::vector<Value> vals = base.values;
        if (t.vers_col >= 0) vals[static_cast<std::size_t>(t.vers_col)] = Value(base.vers + 1);
        row.chain.push_back(Version{base.vers + 1, vals, txn_id, true});
        tx.written.emplace_back(ti, id);
        writes.push_back({t.name, st_.reported_id(t, row, row.chain.back()), base.vers + 1, TouchKind::Delete});
        fire(ctx, ti, sql::TriggerEvent::Delete, &base.values, nullptr);
      }
      r.affected = static_cast<std::int64_t>(targets.size());
    } else if (const auto* ins = std::get_if<sql::Insert>(&stmt)) {
      is_write = true;
      int ti = 0;
      st_.table_or_throw(ins->table, &ti);
      const Table& t = st_.tables[static_cast<std::size_t>(ti)];
      std::vector<std::string> cols = ins->columns;
      if (cols.empty()) {
        for (const auto& c : t.columns) cols.push_back(c.name);
      }
      for (const auto& c : cols) {
        if (t.column_index(c) < 0) throw SqlError(ErrorClass::SemanticError, "Unknown column '" + c + "' in 'field list'");
      }
      std::vector<std::vector<Value>> rows;
      for (std::size_t i = 0; i < ins->rows.size(); ++i) {
        if (ins->rows[i].size() != cols.size()) {
          throw SqlError(ErrorClass::Other,
                         "Column count doesn't match value count at row " + std::to_string(i + 1));
        }
        std::vector<Value> vals;
        for (const auto& e : ins->rows[i]) vals.push_back(ctx.eval(*e, nullptr));
        rows.push_back(std::move(vals));
      }
      ctx.locks.push_back({{ti, 0}, LockMode::IX});
      for (const auto& l : trigger_locks(t, sql::TriggerEvent::Insert)) ctx.locks.push_back(l);
      holders = st_.conflicts(ctx.locks, txn_id);
      if (!holders.empty()) return std::nullopt;
      st_.acquire(ctx.locks, txn_id);
      for (const auto& vals : rows) {
        auto rowid = insert_row(ctx, ti, cols, vals);
        const Table& tt = st_.tables[static_cast<std::size_t>(ti)];
        const Row& row = tt.rows[static_cast<std::size_t>(rowid) - 1];
        writes.push_back({tt.name, st_.reported_id(tt, row, row.chain.back()), 0, TouchKind::Insert});
        const auto new_vals = row.chain.back().values;
        fire(ctx, ti, sql::TriggerEvent::Insert, nullptr, &new_vals);
      }
      r.affected = static_cast<std::int64_t>(rows.size());
    }

    if (sem.ser_locking) {
      for (const auto& [ti, rowid] : ctx.read_rows) {
        const Row& row = st_.tables[static_cast<std::size_t>(ti)].rows[static_cast<std::size_t>(rowid) - 1];
        const Version* lc = st_.latest_committed(row);
        if (lc && lc->writer != txn_id && st_.commit_ts(lc->writer) > snap) {
          throw SqlError(ErrorClass::Other, kSerializationFailure);
        }
      }
    }
  } catch (const SqlError& e) {
    r = EngineResult{};
    r.error = e.err;
  }

  Txn& t = txn(txn_id);
  if (r.ok()) {
    if (!t.snapshot && (sem.snapshot_on_first_stmt || (sem.snapshot_on_first_read && ctx.view_used))) {
      t.snapshot = snap;
    }
    r.touched = std::move(ctx.touched);
    r.touched.insert(r.touched.end(), writes.begin(), writes.end());
  }
  r.timestamp = st_.tick();
  if (is_write && r.ok()) {
    OpRecord rec;
    rec.global_seq = static_cast<std::int64_t>(st_.event_log.size());
    rec.txn = s.id;
    rec.op_kind = RecordKind::Write;
    rec.stmt_text = text;
    rec.touched = writes;
    rec.timestamp = r.timestamp;
    st_.event_log.push_back(std::move(rec));
  }
  if (t.state == TxnState::Active) {
    if (r.ok()) {
      if (t.autocommit) commit_txn(txn_id);
    } else if (r.error->cls == ErrorClass::Other) {
      rollback_txn(txn_id);
      if (!t.autocommit) s.aborted = true;
    } else if (t.autocommit) {
      rollback_txn(txn_id);
    }
  }
  return r;
}

}  // namespace detail


namespace {

Executor make_exec(EngineState& st) { return Executor(st); }

}  // namespace

Engine::Engine(FaultSet faults, IsolationLevel default_level) : st_(std::make_unique<EngineState>()) {
  st_->faults = std::move(faults);
  st_->default_level = default_level;
  Txn boot;
  boot.id = 0;
  boot.state = TxnState::Committed;
  st_->txns.push_back(boot);
}

Engine::~Engine() = default;

int Engine::open_session() {
  Session s;
  s.id = st_->next_session++;
  s.next_level = st_->default_level;
  st_->sessions[s.id] = std::move(s);
  return st_->sessions.rbegin()->first;
}

namespace {

Session& session_or_throw(EngineState& st, int id) {
  auto it = st.sessions.find(id);
  if (it == st.sessions.end() || !it->second.open) {
    throw std::logic_error("unknown session " + std::to_string(id));
  }
  return it->second;
}

}  // namespace

void Engine::close_session(int session) {
  auto it = st_->sessions.find(session);
  if (it == st_->sessions.end() || !it->second.open) return;
  make_exec(*st_).close(it->second);
}

void Engine::submit(int session, std::string_view sql) {
  make_exec(*st_).submit(session_or_throw(*st_, session), sql);
}

bool Engine::pending(int session) const {
  auto it = st_->sessions.find(session);
  return it != st_->sessions.end() && it->second.parked.has_value();
}

std::optional<EngineResult> Engine::take_result(int session) {
  auto& s = session_or_throw(*st_, session);
  if (s.parked || !s.result) return std::nullopt;
  auto r = std::move(s.result);
  s.result.reset();
  return r;
}

EngineResult Engine::execute(int session, std::string_view sql) {
  submit(session, sql);
  auto r = take_result(session);
  if (!r) throw std::logic_error("statement blocked: " + std::string(sql));
  return *r;
}

void Engine::set_fault(Fault f, bool on) {
  if (any_transaction_open()) throw EngineBusy("cannot change fault switches while a transaction is open");
  if (on) {
    st_->faults.insert(f);
  } else {
    st_->faults.erase(f);
  }
}

const FaultSet& Engine::faults() const { return st_->faults; }

bool Engine::any_transaction_open() const {
  return std::any_of(st_->sessions.begin(), st_->sessions.end(),
                     [](const auto& kv) { return kv.second.open && kv.second.txn != 0; });
}

bool Engine::in_transaction(int session) const {
  auto it = st_->sessions.find(session);
  return it != st_->sessions.end() && it->second.txn != 0;
}

std::int64_t Engine::connection_id(int session) const { return session; }

const std::vector<OpRecord>& Engine::event_log() const { return st_->event_log; }

std::vector<RowSnapshot> Engine::committed_rows(const std::string& table) const {
  std::vector<RowSnapshot> out;
  int ti = st_->table_index(table);
  if (ti < 0) return out;
  const Table& t = st_->tables[static_cast<std::size_t>(ti)];
  for (const auto& row : t.rows) {
    const Version* v = st_->latest_committed(row);
    if (!v || v->deleted) continue;
    out.push_back({st_->reported_id(t, row, *v), v->vers, v->values});
  }
  return out;
}

std::vector<std::string> Engine::column_names(const std::string& table) const {
  std::vector<std::string> out;
  int ti = st_->table_index(table);
  if (ti < 0) return out;
  for (const auto& c : st_->tables[static_cast<std::size_t>(ti)].columns) out.push_back(c.name);
  return out;
}

std::int64_t Engine::now() const { return st_->clock; }

}  // namespace txpat::engine
