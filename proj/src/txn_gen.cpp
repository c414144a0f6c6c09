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

#include "txpat/txn_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "txpat/text.hpp"

namespace txpat {

namespace {

bool kind_allowed(const SlotRequirement& slot, StmtKind k) {
  return std::find(slot.kinds.begin(), slot.kinds.end(), k) != slot.kinds.end();
}

bool table_matches(const SlotRequirement& slot, const Statement& st) {
  if (slot.table.empty()) return true;
  return std::any_of(st.tables.begin(), st.tables.end(),
                     [&](const std::string& t) { return text::iequals(t, slot.table); });
}

struct VarOps {
  std::vector<int> op_indices;  // into pattern ops
};

std::map<std::string, VarOps> ops_by_var(const AnomalyPattern& p) {
  std::map<std::string, VarOps> out;
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    if (p.ops[i].is_data()) out[p.ops[i].var].op_indices.push_back(static_cast<int>(i));
  }
  return out;
}

StepRole role_of(const std::string& sql) {
  auto u = text::to_upper(text::trim(sql));
  if (text::istarts_with(u, "SET")) return StepRole::Set;
  if (text::istarts_with(u, "BEGIN") || text::istarts_with(u, "START")) return StepRole::Begin;
  return StepRole::Script;
}

}  // namespace

int TransactionCase::txn_count() const {
  int n = 0;
  for (const auto& s : steps) n = std::max(n, s.txn);
  return n;
}

std::vector<std::vector<std::string>> TransactionCase::txns() const {
  std::vector<std::vector<std::string>> out(static_cast<std::size_t>(txn_count()));
  for (const auto& s : steps) out[static_cast<std::size_t>(s.txn) - 1].push_back(s.sql);
  return out;
}

std::vector<int> TransactionCase::schedule() const {
  std::vector<int> out;
  for (const auto& s : steps) out.push_back(s.txn);
  return out;
}

std::vector<Statement> select_statements(const std::vector<Statement>& pool,
                                         const std::vector<SlotRequirement>& slots, Rng& rng) {
  std::vector<Statement> out;
  for (const auto& slot : slots) {
    if (kind_allowed(slot, StmtKind::Commit)) {
      out.push_back(make_commit());
      continue;
    }
    if (kind_allowed(slot, StmtKind::Rollback)) {
      out.push_back(make_rollback());
      continue;
    }
    std::vector<const Statement*> cands;
    for (const auto& st : pool) {
      if (kind_allowed(slot, st.kind) && table_matches(slot, st)) cands.push_back(&st);
    }
    if (cands.empty()) {
      std::string kinds;
      for (auto k : slot.kinds) kinds += std::string(kinds.empty() ? "" : "/") + std::string(to_string(k));
      throw PoolExhausted("statement pool has no " + kinds +
                          (slot.table.empty() ? "" : " on " + slot.table));
    }
    out.push_back(*cands[rng.index(cands.size())]);
  }
  return out;
}

std::vector<Statement> select_statements(const std::vector<Statement>& pool,
                                         const StmtTypeConstraint& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SlotRequirement> slots;
  for (int i = 0; i < c.n_R; ++i) slots.push_back({{StmtKind::Select}, ""});
  for (int i = 0; i < c.n_W; ++i) slots.push_back({{StmtKind::Update}, ""});
  for (int i = 0; i < c.n_B; ++i) slots.push_back({{StmtKind::Rollback}, ""});
  for (int i = 0; i < c.n_C; ++i) slots.push_back({{StmtKind::Commit}, ""});
  return select_statements(pool, slots, rng);
}

VarBinding bind_variables(const Schema& s, const DataAccessConstraint& dac, std::uint64_t seed,
                          double recency_bias) {
  Rng rng(seed);
  std::map<std::string, std::set<int>> versions;
  for (const auto& [h, vv] : dac.entries) versions[vv.var].insert(vv.version);
  std::size_t total_rows = 0;
  for (const auto& t : s.tables) total_rows += t.rows.size();
  if (total_rows < versions.size()) {
    throw InsufficientRows("pattern needs " + std::to_string(versions.size()) +
                           " distinct rows, schema has " + std::to_string(total_rows));
  }
  VarBinding b;
  std::set<std::pair<std::string, std::int64_t>> used;
  const int id_of = 0;
  (void)id_of;
  for (const auto& [var, vs] : versions) {
    std::vector<const TableDef*> tables;
    for (const auto& t : s.tables) {
      std::size_t taken = 0;
      for (const auto& u : used) taken += u.first == t.name ? 1 : 0;
      if (taken < t.rows.size()) tables.push_back(&t);
    }
    const TableDef* t = tables[rng.index(tables.size())];
    const int idc = t->column_index(kIdColumn);
    std::vector<std::int64_t> ids;
    std::vector<double> weights;
    const std::size_t n = t->rows.size();
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t id = t->rows[i][static_cast<std::size_t>(idc)].as_int();
      if (used.count({t->name, id})) continue;
      ids.push_back(id);
      weights.push_back(std::pow(recency_bias, static_cast<double>(n - 1 - i)));
    }
    std::int64_t id = ids[rng.weighted(weights)];
    used.insert({t->name, id});
    VarTarget target;
    target.table = t->name;
    target.row_id = id;
    target.versions.assign(vs.begin(), vs.end());
    b.vars[var] = target;
  }
  return b;
}

TransactionCase compose(const std::map<int, std::vector<Statement>>& selected,
                        const VarBinding& binding, const DataAccessConstraint& dac,
                        const ScheduleOrder& schedule, IsolationLevel isolation, const Schema& schema,
                        std::uint64_t seed, const ComposeOptions& opts) {
  Rng rng(seed);
  const auto handles = schedule_handles(schedule);
  std::map<int, int> op_count;
  for (const auto& h : handles) op_count[h.txn] = std::max(op_count[h.txn], h.intra_index);
  for (const auto& [t, n] : op_count) {
    auto it = selected.find(t);
    if (it == selected.end() || static_cast<int>(it->second.size()) != n) {
      throw ConsistencyError("transaction " + std::to_string(t) + " needs " + std::to_string(n) +
                             " statements");
    }
  }
  if (selected.size() != op_count.size()) throw ConsistencyError("statements for unknown transactions");

  // Columns rewritten by the case's updates are useless as predicates.
  std::map<std::string, std::set<std::string>> modified;
  for (const auto& [t, stmts] : selected) {
    for (const auto& st : stmts) {
      for (const auto& c : assigned_columns(st)) modified[st.tables.at(0)].insert(c);
    }
  }

  TransactionCase out;
  out.schema = schema;
  out.init_sql = emit_ddl(schema);
  for (auto& s : render_seed_data(schema)) out.init_sql.push_back(std::move(s));
  out.isolation = isolation;
  out.seed = seed;
  out.binding = binding;

  std::vector<int> txns;
  for (const auto& [t, n] : op_count) txns.push_back(t);
  if (opts.emit_set_isolation) {
    for (int t : txns) {
      out.steps.push_back({t, sql::render(sql::Statement{sql::SetIsolation{isolation}}), StepRole::Set, -1});
    }
  }
  const std::vector<double> bw(opts.begin_weights.begin(), opts.begin_weights.end());
  for (int t : txns) {
    auto variant = static_cast<sql::BeginVariant>(rng.weighted(bw));
    out.steps.push_back({t, std::string(sql::to_sql(variant)), StepRole::Begin, -1});
  }

  std::map<std::string, int> top;
  std::map<std::string, int> insert_seen;
  for (std::size_t i = 0; i < handles.size(); ++i) {
    const auto& h = handles[i];
    const Statement& st = selected.at(h.txn)[static_cast<std::size_t>(h.intra_index) - 1];
    auto it = dac.entries.find(h);
    Statement aligned = st;
    if (it == dac.entries.end()) {
      if (st.kind != StmtKind::Commit && st.kind != StmtKind::Rollback) {
        throw ConsistencyError("terminal op needs COMMIT or ROLLBACK");
      }
    } else {
      const auto& [var, version] = it->second;
      auto bt = binding.vars.find(var);
      if (bt == binding.vars.end()) throw ConsistencyError("variable " + var + " is unbound");
      const VarTarget& target = bt->second;
      const bool is_write = version == top[var] + 1;
      if (is_write) top[var] = version;
      if (is_write != is_write_kind(st.kind) || (!is_write && !is_read_kind(st.kind))) {
        throw ConsistencyError("statement kind " + std::string(to_string(st.kind)) +
                               " does not fit op " + std::to_string(i));
      }
      const bool on_table = std::any_of(st.tables.begin(), st.tables.end(), [&](const auto& t) {
        return text::iequals(t, target.table);
      });
      if (!on_table) throw ConsistencyError("statement does not touch " + target.table);
      if (st.kind == StmtKind::Insert) {
        if (!target.created_by_insert || insert_seen[var]++ > 0) {
          throw ConsistencyError("INSERT must realize the first write of an insert-bound variable");
        }
        aligned = instantiate_insert(st, schema, target.row_id, rng);
      } else {
        if (target.created_by_insert && insert_seen[var] == 0) {
          throw ConsistencyError("insert-bound variable " + var + " is accessed before its INSERT");
        }
        ConditionOptions co;
        co.for_write = is_write;
        co.insert_target = target.created_by_insert;
        co.avoid_columns = modified[target.table];
        auto cond = gen_condition(schema, target.table, target.row_id, rng, opts.sql, co);
        aligned = align_condition(st, cond);
      }
    }
    out.steps.push_back({h.txn, aligned.text(), StepRole::Pattern, static_cast<int>(i)});
  }
  return out;
}

TransactionCase generate_case(const AnomalyPattern& p, IsolationLevel level, std::uint64_t seed,
                              const GenConfig& cfg) {
  const auto cs = extract_constraints(p);
  const auto var_ops = ops_by_var(p);
  std::string last_error = "no attempts";
  for (int attempt = 0; attempt < std::max(1, cfg.max_attempts); ++attempt) {
    const std::uint64_t base = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    Rng rng(derive_seed(base, 0));
    Schema s = gen_schema(derive_seed(base, 1), cfg.schema);
    const int rows = static_cast<int>(rng.uniform(cfg.schema.min_rows, cfg.schema.max_rows));
    gen_seed_data(s, rows, derive_seed(base, 2), cfg.schema);
    const auto pool = gen_statement_pool(s, derive_seed(base, 3), cfg.pool_size, cfg.sql);
    try {
      VarBinding b = bind_variables(s, cs.data_access, derive_seed(base, 4), cfg.recency_bias);

      std::map<std::string, int> inserts_per_table;
      for (auto& [var, target] : b.vars) {
        const auto& idx = var_ops.at(var).op_indices;
        const auto& first = p.ops[static_cast<std::size_t>(idx.front())];
        const bool reads_v0 = std::any_of(idx.begin(), idx.end(), [&](int i) {
          const auto& op = p.ops[static_cast<std::size_t>(i)];
          return op.kind == OpKind::Read && op.version == 0;
        });
        if (first.kind == OpKind::Write && !reads_v0 && rng.chance(cfg.insert_write_probability)) {
          const TableDef* t = s.table(target.table);
          target.row_id = t->next_id() + inserts_per_table[target.table]++;
          target.created_by_insert = true;
        }
      }

      std::map<int, std::vector<SlotRequirement>> slots;
      std::map<std::string, bool> first_write_done;
      for (std::size_t i = 0; i < p.ops.size(); ++i) {
        const auto& op = p.ops[i];
        SlotRequirement slot;
        switch (op.kind) {
          case OpKind::Commit: slot.kinds = {StmtKind::Commit}; break;
          case OpKind::Abort: slot.kinds = {StmtKind::Rollback}; break;
          case OpKind::Read:
            slot.kinds = {StmtKind::Select, StmtKind::SelectJoin};
            slot.table = b.vars.at(op.var).table;
            break;
          case OpKind::Write: {
            const auto& target = b.vars.at(op.var);
            slot.table = target.table;
            const bool last = var_ops.at(op.var).op_indices.back() == static_cast<int>(i);
            if (target.created_by_insert && !first_write_done[op.var]) {
              slot.kinds = {StmtKind::Insert};
            } else if (last && !s.is_fk_parent(target.table) &&
                       rng.chance(cfg.delete_write_probability)) {
              slot.kinds = {StmtKind::Delete};
            } else {
              slot.kinds = {StmtKind::Update};
            }
            first_write_done[op.var] = true;
            break;
          }
        }
        slots[op.txn].push_back(std::move(slot));
      }

      std::map<int, std::vector<Statement>> selected;
      for (const auto& [t, sl] : slots) selected[t] = select_statements(pool, sl, rng);
      auto c = compose(selected, b, cs.data_access, cs.schedule, level, s, derive_seed(base, 5),
                       cfg.compose);
      c.pattern_id = p.id;
      c.seed = seed;
      return c;
    } catch (const PoolExhausted& e) {
      last_error = e.what();
    } catch (const InsufficientRows& e) {
      last_error = e.what();
    }
  }
  throw PoolExhausted("could not generate a case for " + p.id + ": " + last_error);
}

std::string strip_statement(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == ';') {
      return std::string(text::trim(line.substr(0, i)));
    }
  }
  return std::string(text::trim(line));
}

std::string format_reproducer(const TransactionCase& c) {
  std::ostringstream out;
  if (!c.pattern_id.empty()) out << "-- pattern: " << c.pattern_id << "\n";
  out << "-- isolation: " << to_string(c.isolation) << "\n";
  out << "-- seed: " << c.seed << "\n";
  for (const auto& [var, t] : c.binding.vars) {
    out << "-- bind: " << var << " = " << t.table << ".ID=" << t.row_id
        << (t.created_by_insert ? " (inserted)" : "") << "\n";
  }
  for (const auto& s : c.init_sql) out << "/*init*/ " << s << ";\n";
  for (const auto& s : c.steps) out << "/*txn " << s.txn << "*/ " << s.sql << ";\n";
  return out.str();
}

TransactionCase parse_reproducer(std::string_view content) {
  TransactionCase c;
  std::istringstream in{std::string(content)};
  std::string line;
  int lineno = 0;
  bool have_isolation = false;
  std::optional<IsolationLevel> last_set;
  std::vector<std::string> ddl;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.substr(0, 2) == "--") {
      auto body = text::trim(t.substr(2));
      auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      auto key = text::to_lower(text::trim(body.substr(0, colon)));
      auto val = std::string(text::trim(body.substr(colon + 1)));
      if (key == "pattern") {
        c.pattern_id = val;
      } else if (key == "isolation") {
        auto lv = parse_isolation(val);
        if (!lv) throw ReproducerParseError("unknown isolation level '" + val + "'", lineno);
        c.isolation = *lv;
        have_isolation = true;
      } else if (key == "seed") {
        try {
          c.seed = std::stoull(val);
        } catch (...) {
          throw ReproducerParseError("bad seed '" + val + "'", lineno);
        }
      }
      continue;
    }
    if (t.substr(0, 2) != "/*") throw ReproducerParseError("expected /*init*/ or /*txn N*/", lineno);
    auto close = t.find("*/");
    if (close == std::string_view::npos) throw ReproducerParseError("unterminated tag", lineno);
    auto tag = text::to_lower(text::trim(t.substr(2, close - 2)));
    auto stmt = strip_statement(t.substr(close + 2));
    if (stmt.empty()) throw ReproducerParseError("missing statement", lineno);
    if (tag == "init") {
      c.init_sql.push_back(stmt);
      if (text::istarts_with(stmt, "CREATE TABLE")) ddl.push_back(stmt);
      continue;
    }
    if (tag.rfind("txn", 0) != 0) throw ReproducerParseError("unknown tag '" + tag + "'", lineno);
    int txn = 0;
    try {
      std::size_t used = 0;
      auto num = std::string(text::trim(tag.substr(3)));
      txn = std::stoi(num, &used);
      if (used != num.size()) throw std::invalid_argument(num);
    } catch (...) {
      throw ReproducerParseError("bad transaction tag '" + tag + "'", lineno);
    }
    if (txn < 1) throw ReproducerParseError("transaction numbers start at 1", lineno);
    StepRole role = role_of(stmt);
    if (role == StepRole::Set) {
      try {
        auto parsed = sql::parse_statement(stmt);
        if (auto* si = std::get_if<sql::SetIsolation>(&parsed)) last_set = si->level;
      } catch (const sql::SqlSyntaxError&) {
        // Left for the engine to reject at execution time.
      }
    }
    c.steps.push_back({txn, stmt, role, -1});
  }
  if (c.steps.empty() && c.init_sql.empty()) throw ReproducerParseError("empty reproducer", lineno);
  if (!have_isolation && last_set) c.isolation = *last_set;
  try {
    c.schema = schema_from_ddl(ddl);
  } catch (const sql::SqlSyntaxError&) {
    c.schema = Schema{};
  }
  return c;
}

TransactionCase load_reproducer(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_reproducer(ss.str());
}

}  // namespace txpat
