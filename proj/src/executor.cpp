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

#include "txpat/executor.hpp"

#include <algorithm>
#include <map>
#include <thread>

#include "txpat/engine.hpp"
#include "txpat/text.hpp"

namespace txpat {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t wall_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::optional<Completion> run_sync(DbAdapter& a, SessionId s, const std::string& sql,
                                   std::chrono::milliseconds timeout) {
  a.submit(s, sql);
  return a.wait(s, timeout);
}

std::string trigger_sql(const TableDef& t, std::string_view event, std::string_view row_ref) {
  const bool has_vers = t.column_index(kVersColumn) >= 0;
  std::string ver = has_vers ? std::string(row_ref) + "." + kVersColumn : "0";
  return "CREATE TRIGGER tri_" + text::to_lower(event) + "_" + t.name + " AFTER " + std::string(event) + " ON " +
         t.name + " FOR EACH ROW BEGIN INSERT INTO " + log_table_name(t.name) +
         " (operation_type, txn_id, row_id, version, time) VALUES ('" + std::string(event) +
         "', CONNECTION_ID(), " + std::string(row_ref) + "." + kIdColumn + ", " + ver + ", SYSDATE(6)); END";
}

std::optional<TouchKind> touch_kind_of(std::string_view op) {
  if (text::iequals(op, "INSERT")) return TouchKind::Insert;
  if (text::iequals(op, "UPDATE")) return TouchKind::Update;
  if (text::iequals(op, "DELETE")) return TouchKind::Delete;
  return std::nullopt;
}

void probe_select(const sql::Select& s, const Schema& schema, sql::Select& out,
                  std::vector<AugmentedRead::Probe>& probes) {
  std::vector<const sql::TableRef*> refs;
  if (s.from) refs.push_back(&*s.from);
  for (const auto& j : s.joins) refs.push_back(&j.ref);
  for (const auto* r : refs) {
    if (r->derived) continue;
    const TableDef* t = schema.table(r->table);
    if (!t || t->column_index(kIdColumn) < 0) continue;
    const std::string k = std::to_string(probes.size());
    AugmentedRead::Probe p{t->name, "__txpat_id_" + k, ""};
    out.items.push_back({false, "", sql::make_column(r->exposed_name(), kIdColumn), p.id_alias});
    if (t->column_index(kVersColumn) >= 0) {
      p.vers_alias = "__txpat_vers_" + k;
      out.items.push_back({false, "", sql::make_column(r->exposed_name(), kVersColumn), p.vers_alias});
    }
    probes.push_back(std::move(p));
  }
}

}  // namespace

std::string log_table_name(const std::string& table) { return table + "_log"; }

std::vector<std::string> recording_ddl(const Schema& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tables) {
    if (t.column_index(kIdColumn) < 0) continue;
    out.push_back("CREATE TABLE " + log_table_name(t.name) +
                  " (operation_type TEXT, txn_id INT, row_id INT, version INT, time TEXT)");
    out.push_back(trigger_sql(t, "INSERT", "NEW"));
    out.push_back(trigger_sql(t, "UPDATE", "NEW"));
    out.push_back(trigger_sql(t, "DELETE", "OLD"));
  }
  return out;
}

void install_recording(DbAdapter& adapter, SessionId setup, const Schema& s) {
  if (!adapter.supports_triggers()) throw TriggerUnsupported(adapter.backend() + " does not support triggers");
  for (const auto& stmt : recording_ddl(s)) {
    auto c = run_sync(adapter, setup, stmt, std::chrono::milliseconds(30000));
    if (!c) throw std::runtime_error("recording setup timed out: " + stmt);
    if (!c->ok()) throw std::runtime_error("recording setup failed: " + c->error->message);
  }
}

AugmentedRead augment_read(const std::string& text, const Schema& s) {
  AugmentedRead out{text, {}};
  try {
    auto stmt = sql::parse_statement(text);
    const auto* sel = std::get_if<sql::Select>(&stmt);
    if (!sel) return out;
    sql::Select aug = *sel;
    probe_select(*sel, s, aug, out.probes);
    if (!out.probes.empty()) out.sql = sql::render(aug);
  } catch (const sql::SqlSyntaxError&) {
  }
  return out;
}

namespace {

ExecutionTrace schedule_impl(const TransactionCase& c, DbAdapter& adapter, const ExecutorConfig& cfg,
                             std::map<int, std::int64_t>* conn_of_txn) {
  ExecutionTrace trace;
  trace.pattern_id = c.pattern_id;
  trace.isolation = c.isolation;
  trace.seed = c.seed;
  trace.backend = adapter.backend();
  trace.reproducer = format_reproducer(c);
  const auto t_block = cfg.block_timeout.count() > 0 ? cfg.block_timeout : adapter.default_block_timeout();
  const bool native = adapter.native_provenance();

  const int n_txn = c.txn_count();
  std::map<int, SessionHandle> sessions;
  for (int t = 1; t <= n_txn; ++t) {
    sessions[t] = SessionHandle{adapter.open_session(), t, false, -1, {}};
    if (conn_of_txn) (*conn_of_txn)[t] = adapter.connection_id(sessions[t].id);
  }

  const std::size_t n = c.steps.size();
  std::vector<bool> issued(n, false), done(n, false);
  std::vector<AugmentedRead> augmented(n);
  std::vector<int> wait_list;
  const auto deadline = Clock::now() + cfg.case_timeout;

  auto complete = [&](std::size_t i, Completion&& comp) {
    const auto& step = c.steps[i];
    auto& sh = sessions[step.txn];
    OpRecord rec;
    rec.global_seq = static_cast<std::int64_t>(trace.records.size());
    rec.txn = step.txn;
    rec.op_kind = record_kind_of(step.sql);
    rec.stmt_text = step.sql;
    rec.timestamp = comp.timestamp.value_or(wall_us());
    rec.status.blocked = comp.was_blocked || sh.blocked;
    rec.status.error = comp.error;
    rec.step = static_cast<int>(i);
    if (comp.error) sh.messages.push_back(comp.error->message);
    if (native) {
      rec.touched = std::move(comp.touched);
    } else if (comp.ok() && !augmented[i].probes.empty()) {
      for (const auto& row : comp.result.rows) {
        for (const auto& p : augmented[i].probes) {
          int ic = comp.result.column_index(p.id_alias);
          if (ic < 0 || !row[static_cast<std::size_t>(ic)].is_int()) continue;
          std::int64_t ver = 0;
          int vc = p.vers_alias.empty() ? -1 : comp.result.column_index(p.vers_alias);
          if (vc >= 0 && row[static_cast<std::size_t>(vc)].is_int()) ver = row[static_cast<std::size_t>(vc)].as_int();
          TouchedRow tr{p.table, row[static_cast<std::size_t>(ic)].as_int(), ver, TouchKind::Read};
          if (std::find(rec.touched.begin(), rec.touched.end(), tr) == rec.touched.end()) rec.touched.push_back(tr);
        }
      }
    }
    if (comp.error && is_terminal(comp.error->cls) && !trace.terminal) trace.terminal = comp.error;
    trace.records.push_back(std::move(rec));
    done[i] = true;
    sh.pending_step = -1;
    sh.blocked = false;
  };

  auto harvest = [&](std::chrono::milliseconds timeout) {
    bool any = false;
    for (auto it = wait_list.begin(); it != wait_list.end();) {
      auto& sh = sessions[*it];
      auto comp = adapter.wait(sh.id, timeout);
      if (comp) {
        complete(static_cast<std::size_t>(sh.pending_step), std::move(*comp));
        it = wait_list.erase(it);
        any = true;
      } else {
        ++it;
      }
    }
    return any;
  };

  auto next_eligible = [&]() -> std::optional<std::size_t> {
    std::map<int, bool> txn_seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      const int t = c.steps[i].txn;
      if (txn_seen[t]) continue;  // an earlier step of this txn is still open
      txn_seen[t] = true;
      if (issued[i] || sessions[t].pending_step >= 0) continue;
      return i;
    }
    return std::nullopt;
  };

  while (!trace.terminal) {
    if (std::all_of(done.begin(), done.end(), [](bool d) { return d; })) break;
    if (Clock::now() > deadline) {
      trace.timed_out = true;
      break;
    }
    if (auto i = next_eligible()) {
      const auto& step = c.steps[*i];
      auto& sh = sessions[step.txn];
      std::string sql = step.sql;
      if (!native && record_kind_of(sql) == RecordKind::Read) {
        augmented[*i] = augment_read(sql, c.schema);
        sql = augmented[*i].sql;
      }
      adapter.submit(sh.id, sql);
      issued[*i] = true;
      sh.pending_step = static_cast<int>(*i);
      auto comp = adapter.wait(sh.id, t_block);
      if (comp) {
        complete(*i, std::move(*comp));
      } else {
        sh.blocked = true;
        wait_list.push_back(step.txn);
      }
      harvest(std::chrono::milliseconds(0));
      continue;
    }
    if (wait_list.empty()) break;
    const auto slice = std::min<std::chrono::milliseconds>(
        t_block, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()));
    if (!harvest(std::max(slice, std::chrono::milliseconds(1))) && Clock::now() > deadline) {
      trace.timed_out = true;
      break;
    }
    if (!harvest(std::chrono::milliseconds(0)) && std::chrono::milliseconds(0) == t_block) {
      std::this_thread::yield();
    }
  }

  trace.outcomes.assign(static_cast<std::size_t>(n_txn), TxnOutcome::Undetermined);
  for (const auto& r : trace.records) {
    if (r.txn < 1) continue;
    auto& o = trace.outcomes[static_cast<std::size_t>(r.txn) - 1];
    switch (r.op_kind) {
      case RecordKind::Begin: o = TxnOutcome::Undetermined; break;
      case RecordKind::Commit: o = r.status.ok() ? TxnOutcome::Committed : TxnOutcome::Aborted; break;
      case RecordKind::Rollback: o = TxnOutcome::Aborted; break;
      default: break;
    }
  }
  for (auto& [t, sh] : sessions) adapter.close_session(sh.id);
  return trace;
}

}  // namespace

ExecutionTrace run_schedule(const TransactionCase& c, DbAdapter& adapter, const ExecutorConfig& cfg) {
  return schedule_impl(c, adapter, cfg, nullptr);
}

ExecutionTrace run_case(const TransactionCase& c, DbAdapter& adapter, const ExecutorConfig& cfg) {
  const SessionId setup = adapter.open_session();
  auto fail = [&](DbError err) {
    ExecutionTrace t;
    t.pattern_id = c.pattern_id;
    t.isolation = c.isolation;
    t.seed = c.seed;
    t.backend = adapter.backend();
    t.reproducer = format_reproducer(c);
    t.outcomes.assign(static_cast<std::size_t>(c.txn_count()), TxnOutcome::Undetermined);
    t.terminal = std::move(err);
    adapter.close_session(setup);
    return t;
  };
  for (const auto& stmt : c.init_sql) {
    auto comp = run_sync(adapter, setup, stmt, cfg.case_timeout);
    if (!comp) return fail(DbError{ErrorClass::LockTimeout, "setup statement timed out: " + stmt});
    if (!comp->ok()) return fail(*comp->error);
  }
  bool degraded = false;
  if (!adapter.native_provenance()) {
    try {
      install_recording(adapter, setup, c.schema);
    } catch (const TriggerUnsupported&) {
      degraded = true;
    } catch (const std::runtime_error& e) {
      return fail(DbError{classify_message(e.what()), e.what()});
    }
  }

  std::map<int, std::int64_t> conn_of_txn;
  ExecutionTrace trace = schedule_impl(c, adapter, cfg, &conn_of_txn);
  trace.degraded = trace.degraded || degraded;

  if (!adapter.native_provenance() && !degraded) {
    // Attribute trigger-log rows to the write statements that produced them.
    struct LogRow {
      std::string table;
      TouchKind kind;
      std::int64_t conn, row_id, version, time;
    };
    std::vector<LogRow> rows;
    for (const auto& t : c.schema.tables) {
      if (t.column_index(kIdColumn) < 0) continue;
      auto comp = run_sync(adapter, setup,
                           "SELECT operation_type, txn_id, row_id, version, time FROM " + log_table_name(t.name),
                           cfg.case_timeout);
      if (!comp || !comp->ok()) {
        trace.degraded = true;
        continue;
      }
      for (const auto& r : comp->result.rows) {
        auto kind = touch_kind_of(r[0].to_display());
        auto time = engine::parse_datetime_us(r[4].to_display());
        if (!kind || !time || !r[1].is_int() || !r[2].is_int() || !r[3].is_int()) continue;
        // A delete logs the OLD row; it installs the next version.
        const std::int64_t version = r[3].as_int() + (*kind == TouchKind::Delete ? 1 : 0);
        rows.push_back({t.name, *kind, r[1].as_int(), r[2].as_int(), version, *time});
      }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const LogRow& a, const LogRow& b) { return a.time < b.time; });
    for (const auto& lr : rows) {
      for (auto& rec : trace.records) {
        if (rec.op_kind != RecordKind::Write || !rec.status.ok()) continue;
        auto it = conn_of_txn.find(rec.txn);
        if (it == conn_of_txn.end() || it->second != lr.conn || rec.timestamp < lr.time) continue;
        auto tables = std::vector<std::string>{};
        try {
          tables = sql::referenced_tables(sql::parse_statement(rec.stmt_text));
        } catch (const sql::SqlSyntaxError&) {
        }
        if (!tables.empty() && !text::iequals(tables.front(), lr.table)) continue;
        rec.touched.push_back({lr.table, lr.row_id, lr.version, lr.kind});
        break;
      }
    }
    for (std::size_t t = 0; t < trace.outcomes.size(); ++t) {
      if (trace.outcomes[t] != TxnOutcome::Aborted) continue;
      for (const auto& rec : trace.records) {
        if (rec.txn == static_cast<int>(t) + 1 && rec.op_kind == RecordKind::Write && rec.status.ok()) {
          trace.degraded = true;
        }
      }
    }
  }
  adapter.close_session(setup);
  return trace;
}

}  // namespace txpat
