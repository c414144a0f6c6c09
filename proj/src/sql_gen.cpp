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

#include "txpat/sql_gen.hpp"

#include <algorithm>

#include "txpat/text.hpp"

namespace txpat {

namespace {

constexpr std::int64_t kIntMin = -(std::int64_t{1} << 31);
constexpr std::int64_t kIntMax = (std::int64_t{1} << 31) - 1;

const std::vector<std::string> kTextPool = {"amber", "birch", "cedar", "delta",
                                            "ember", "flint", "grove", "haze"};

bool is_tracking(const ColumnDef& c) {
  return text::iequals(c.name, kIdColumn) || text::iequals(c.name, kVersColumn);
}

bool is_settable(const ColumnDef& c) {
  return !is_tracking(c) && !c.is_candidate_key() && !c.fk && !c.auto_increment;
}

Value random_literal(Rng& rng, DataType type) {
  switch (type) {
    case DataType::Int: return Value(rng.uniform(kIntMin, kIntMax));
    case DataType::Text: return Value(rng.pick(kTextPool));
    case DataType::Bool: return Value(rng.chance(0.5));
  }
  return Value::null();
}

bool value_in_column(const TableDef& t, int ci, const Value& v) {
  return std::any_of(t.rows.begin(), t.rows.end(),
                     [&](const auto& r) { return r[static_cast<std::size_t>(ci)] == v; });
}

Value fresh_key(Rng& rng, const TableDef& t, int ci) {
  const auto& c = t.columns[static_cast<std::size_t>(ci)];
  for (;;) {
    Value v = c.type == DataType::Text
                  ? Value(rng.pick(kTextPool) + "_" + std::to_string(rng.uniform(0, 99999)))
                  : Value(rng.uniform(kIntMin, kIntMax));
    if (!value_in_column(t, ci, v)) return v;
  }
}

Value insert_value(Rng& rng, const Schema& s, const TableDef& t, int ci, std::int64_t id) {
  const auto& c = t.columns[static_cast<std::size_t>(ci)];
  if (text::iequals(c.name, kIdColumn)) return Value(id);
  if (text::iequals(c.name, kVersColumn)) return Value(std::int64_t{0});
  if (c.fk) {
    auto it = s.inserted_keys.find({c.fk->table, c.fk->column});
    if (it != s.inserted_keys.end() && !it->second.empty()) return rng.pick(it->second);
  }
  if (c.is_candidate_key()) return fresh_key(rng, t, ci);
  return random_literal(rng, c.type);
}

std::vector<const ColumnDef*> user_columns(const TableDef& t) {
  std::vector<const ColumnDef*> out;
  for (const auto& c : t.columns) {
    if (!is_tracking(c)) out.push_back(&c);
  }
  return out;
}

Condition random_pool_condition(Rng& rng, const TableDef& t) {
  if (rng.chance(0.3)) return Condition::empty();
  auto cols = user_columns(t);
  const auto* c = cols[rng.index(cols.size())];
  static constexpr sql::BinOp ops[] = {sql::BinOp::Eq, sql::BinOp::Lt, sql::BinOp::Gt,
                                       sql::BinOp::Le, sql::BinOp::Ge};
  sql::BinOp op = c->type == DataType::Int ? ops[rng.index(5)] : sql::BinOp::Eq;
  return Condition::predicate(t.name, c->name, op, random_literal(rng, c->type));
}

Statement gen_select(Rng& rng, const TableDef& t, const SqlGenConfig& cfg) {
  sql::Select sel;
  if (rng.chance(0.4)) {
    sel.items.push_back({true, "", nullptr, ""});
  } else {
    for (const auto& c : t.columns) {
      if (rng.chance(0.5)) sel.items.push_back({false, "", sql::make_column("", c.name), ""});
    }
    if (sel.items.empty()) sel.items.push_back({false, "", sql::make_column("", t.columns[0].name), ""});
  }
  sel.from = sql::TableRef{t.name, nullptr, ""};
  if (rng.chance(cfg.order_by_probability)) {
    const auto& c = t.columns[rng.index(t.columns.size())];
    sel.order_by.push_back({sql::make_column("", c.name), rng.chance(0.5)});
  }
  if (rng.chance(cfg.limit_probability)) sel.limit = rng.uniform(1, 10);
  Statement st;
  st.kind = StmtKind::Select;
  st.tables = {t.name};
  st.ast = sel;
  return align_condition(st, random_pool_condition(rng, t));
}

Statement gen_update(Rng& rng, const TableDef& t) {
  sql::Update up;
  up.table = t.name;
  std::vector<const ColumnDef*> settable;
  for (const auto& c : t.columns) {
    if (is_settable(c)) settable.push_back(&c);
  }
  rng.shuffle(settable);
  const std::size_t n = std::min<std::size_t>(settable.size(), rng.chance(0.7) ? 1 : 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* c = settable[i];
    sql::ExprPtr v;
    if (c->type == DataType::Int && rng.chance(0.3)) {
      v = sql::make_binary(sql::BinOp::Add, sql::make_column("", c->name),
                           sql::make_literal(Value(rng.uniform(1, 100))));
    } else {
      v = sql::make_literal(random_literal(rng, c->type));
    }
    up.sets.push_back({c->name, v});
  }
  Statement st;
  st.kind = StmtKind::Update;
  st.tables = {t.name};
  st.ast = up;
  return align_condition(st, random_pool_condition(rng, t));
}

Statement gen_insert(Rng& rng, const Schema& s, const TableDef& t) {
  sql::Insert ins;
  ins.table = t.name;
  std::vector<sql::ExprPtr> row;
  for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
    if (t.columns[ci].auto_increment) continue;
    ins.columns.push_back(t.columns[ci].name);
    row.push_back(sql::make_literal(insert_value(rng, s, t, static_cast<int>(ci), t.next_id())));
  }
  ins.rows.push_back(std::move(row));
  Statement st;
  st.kind = StmtKind::Insert;
  st.tables = {t.name};
  st.ast = ins;
  return st;
}

Statement gen_delete(Rng& rng, const TableDef& t) {
  sql::Delete del;
  del.table = t.name;
  Statement st;
  st.kind = StmtKind::Delete;
  st.tables = {t.name};
  st.ast = del;
  return align_condition(st, random_pool_condition(rng, t));
}

struct JoinPair {
  std::string left_table, left_col, right_table, right_col;
};

std::optional<JoinPair> join_pair_for(const Schema& s, const TableDef& t, Rng& rng) {
  std::vector<JoinPair> c1;
  std::vector<JoinPair> c2;
  for (const auto& e : s.fk_edges) {
    if (text::iequals(e.child_table, t.name)) c1.push_back({e.child_table, e.child_column, e.parent_table, e.parent_column});
    if (text::iequals(e.parent_table, t.name) && !text::iequals(e.child_table, t.name)) {
      c2.push_back({e.parent_table, e.parent_column, e.child_table, e.child_column});
    }
  }
  if (!c1.empty()) return c1[rng.index(c1.size())];
  if (!c2.empty()) return c2[rng.index(c2.size())];
  std::vector<JoinPair> c3;
  for (const auto& other : s.tables) {
    if (text::iequals(other.name, t.name)) continue;
    for (const auto& a : t.columns) {
      if (is_tracking(a)) continue;
      for (const auto& b : other.columns) {
        if (!is_tracking(b) && a.type == b.type) c3.push_back({t.name, a.name, other.name, b.name});
      }
    }
  }
  if (!c3.empty()) return c3[rng.index(c3.size())];
  return std::nullopt;
}

}  // namespace

std::string_view to_string(StmtKind kind) {
  switch (kind) {
    case StmtKind::Select: return "Select";
    case StmtKind::SelectJoin: return "SelectJoin";
    case StmtKind::Update: return "Update";
    case StmtKind::Insert: return "Insert";
    case StmtKind::Delete: return "Delete";
    case StmtKind::Commit: return "Commit";
    case StmtKind::Rollback: return "Rollback";
    case StmtKind::Begin: return "Begin";
  }
  return "?";
}

bool is_read_kind(StmtKind kind) { return kind == StmtKind::Select || kind == StmtKind::SelectJoin; }

bool is_write_kind(StmtKind kind) {
  return kind == StmtKind::Update || kind == StmtKind::Insert || kind == StmtKind::Delete;
}

Condition Condition::by_row_id(std::string table, std::int64_t id) {
  Condition c;
  c.kind = Kind::ByRowId;
  c.table = std::move(table);
  c.row_id = id;
  c.column = kIdColumn;
  c.literal = Value(id);
  return c;
}

Condition Condition::predicate(std::string table, std::string column, sql::BinOp op, Value literal) {
  Condition c;
  c.kind = Kind::ColumnPredicate;
  c.table = std::move(table);
  c.column = std::move(column);
  c.op = op;
  c.literal = std::move(literal);
  return c;
}

sql::ExprPtr Condition::to_expr(bool qualify) const {
  if (kind == Kind::Empty) return nullptr;
  return sql::make_binary(op, sql::make_column(qualify ? table : "", column), sql::make_literal(literal));
}

bool Condition::matches(const TableDef& t, const std::vector<Value>& row) const {
  if (kind == Kind::Empty) return true;
  int ci = t.column_index(column);
  if (ci < 0) return false;
  auto c = sql_compare(row[static_cast<std::size_t>(ci)], literal);
  if (!c) return false;
  switch (op) {
    case sql::BinOp::Eq: return *c == 0;
    case sql::BinOp::Ne: return *c != 0;
    case sql::BinOp::Lt: return *c < 0;
    case sql::BinOp::Le: return *c <= 0;
    case sql::BinOp::Gt: return *c > 0;
    case sql::BinOp::Ge: return *c >= 0;
    default: return false;
  }
}

std::optional<Statement> gen_join(const Schema& s, std::uint64_t seed) {
  Rng rng(seed);
  return gen_join(s, rng);
}

std::optional<Statement> gen_join(const Schema& s, Rng& rng) {
  if (s.tables.size() < 2) return std::nullopt;
  const std::size_t start = rng.index(s.tables.size());
  for (std::size_t k = 0; k < s.tables.size(); ++k) {
    const auto& t = s.tables[(start + k) % s.tables.size()];
    auto pair = join_pair_for(s, t, rng);
    if (!pair) continue;
    static constexpr sql::JoinType types[] = {sql::JoinType::Inner, sql::JoinType::Left,
                                              sql::JoinType::Right, sql::JoinType::Cross};
    sql::Select sel;
    sel.items.push_back({true, "", nullptr, ""});
    sel.from = sql::TableRef{pair->left_table, nullptr, ""};
    sql::Join j;
    j.type = types[rng.index(4)];
    j.ref = sql::TableRef{pair->right_table, nullptr, ""};
    if (j.type != sql::JoinType::Cross) {
      j.on = sql::make_binary(sql::BinOp::Eq, sql::make_column(pair->left_table, pair->left_col),
                              sql::make_column(pair->right_table, pair->right_col));
    }
    sel.joins.push_back(std::move(j));
    Statement st;
    st.kind = StmtKind::SelectJoin;
    st.tables = {pair->left_table, pair->right_table};
    st.ast = sel;
    return st;
  }
  return std::nullopt;
}

std::vector<Statement> gen_statement_pool(const Schema& s, std::uint64_t seed, int n,
                                          const SqlGenConfig& cfg) {
  if (n < 1) throw std::invalid_argument("pool size must be >= 1");
  if (s.tables.empty()) throw std::invalid_argument("schema has no tables");
  Rng rng(seed);
  std::vector<Statement> pool;
  for (const auto& t : s.tables) {
    pool.push_back(gen_select(rng, t, cfg));
    pool.push_back(gen_update(rng, t));
    pool.push_back(gen_insert(rng, s, t));
    pool.push_back(gen_delete(rng, t));
  }
  if (auto j = gen_join(s, rng)) pool.push_back(*j);
  const std::vector<double> weights = {cfg.select_weight, cfg.join_weight, cfg.update_weight,
                                       cfg.insert_weight, cfg.delete_weight};
  while (static_cast<int>(pool.size()) < n) {
    const auto& t = s.tables[rng.index(s.tables.size())];
    switch (rng.weighted(weights)) {
      case 0: pool.push_back(gen_select(rng, t, cfg)); break;
      case 1:
        if (auto j = gen_join(s, rng)) {
          pool.push_back(*j);
        } else {
          pool.push_back(gen_select(rng, t, cfg));
        }
        break;
      case 2: pool.push_back(gen_update(rng, t)); break;
      case 3: pool.push_back(gen_insert(rng, s, t)); break;
      default: pool.push_back(gen_delete(rng, t)); break;
    }
  }
  return pool;
}

Condition gen_condition(const Schema& s, const std::string& table, std::int64_t target_row_id,
                        std::uint64_t seed, const SqlGenConfig& cfg, const ConditionOptions& opts) {
  Rng rng(seed);
  return gen_condition(s, table, target_row_id, rng, cfg, opts);
}

Condition gen_condition(const Schema& s, const std::string& table, std::int64_t target_row_id,
                        Rng& rng, const SqlGenConfig& cfg, const ConditionOptions& opts) {
  const TableDef* t = s.table(table);
  if (!t) throw MissingRow("unknown table " + table);
  const auto* row = t->row_by_id(target_row_id);
  if (!row && !opts.insert_target) {
    throw MissingRow("row ID=" + std::to_string(target_row_id) + " does not exist in " + table);
  }
  const double r = rng.unit();
  if (r < cfg.p_id) return Condition::by_row_id(t->name, target_row_id);
  if (!opts.for_write && r < cfg.p_id + cfg.p_empty) return Condition::empty();
  if (!row) return Condition::by_row_id(t->name, target_row_id);

  std::vector<Condition> cands;
  for (std::size_t ci = 0; ci < t->columns.size(); ++ci) {
    const auto& c = t->columns[ci];
    if (is_tracking(c) || c.type == DataType::Bool) continue;
    if (opts.avoid_columns.count(c.name)) continue;
    const Value& v = (*row)[ci];
    int equal = 0;
    bool is_min = true;
    bool is_max = true;
    for (const auto& other : t->rows) {
      const Value& w = other[ci];
      if (w == v) ++equal;
      if (w < v) is_min = false;
      if (w > v) is_max = false;
    }
    if (equal != 1) continue;
    // Writes must single out the row even after the case inserts rows, so
    // only key columns and wide-range integers qualify.
    const bool safe_eq = c.is_candidate_key() || c.type == DataType::Int;
    if (!opts.for_write || safe_eq) cands.push_back(Condition::predicate(t->name, c.name, sql::BinOp::Eq, v));
    if (!opts.for_write && c.type == DataType::Int) {
      if (is_min) cands.push_back(Condition::predicate(t->name, c.name, sql::BinOp::Le, v));
      if (is_max) cands.push_back(Condition::predicate(t->name, c.name, sql::BinOp::Ge, v));
    }
  }
  if (cands.empty()) return Condition::by_row_id(t->name, target_row_id);
  return cands[rng.index(cands.size())];
}

Statement align_condition(const Statement& stmt, const Condition& cond) {
  Statement out = stmt;
  out.where = cond;
  switch (stmt.kind) {
    case StmtKind::Select: {
      auto sel = std::get<sql::Select>(stmt.ast);
      sel.where = cond.to_expr(false);
      out.ast = sel;
      break;
    }
    case StmtKind::SelectJoin: {
      auto sel = std::get<sql::Select>(stmt.ast);
      sel.where = cond.to_expr(true);
      out.ast = sel;
      break;
    }
    case StmtKind::Update: {
      auto up = std::get<sql::Update>(stmt.ast);
      up.where = cond.to_expr(false);
      out.ast = up;
      break;
    }
    case StmtKind::Delete: {
      auto del = std::get<sql::Delete>(stmt.ast);
      del.where = cond.to_expr(false);
      out.ast = del;
      break;
    }
    default:
      throw KindError("cannot align the condition of a " + std::string(to_string(stmt.kind)) +
                      " statement");
  }
  return out;
}

Statement instantiate_insert(const Statement& stmt, const Schema& s, std::int64_t id, Rng& rng) {
  if (stmt.kind != StmtKind::Insert) throw KindError("instantiate_insert needs an Insert");
  const TableDef* t = s.table(stmt.tables.at(0));
  if (!t) throw MissingRow("unknown table " + stmt.tables.at(0));
  auto ins = std::get<sql::Insert>(stmt.ast);
  for (std::size_t i = 0; i < ins.columns.size(); ++i) {
    int ci = t->column_index(ins.columns[i]);
    const auto& c = t->columns[static_cast<std::size_t>(ci)];
    if (text::iequals(c.name, kIdColumn)) {
      ins.rows[0][i] = sql::make_literal(Value(id));
    } else if (c.is_candidate_key() && !c.fk) {
      ins.rows[0][i] = sql::make_literal(fresh_key(rng, *t, ci));
    }
  }
  Statement out = stmt;
  out.ast = ins;
  out.where = Condition::by_row_id(t->name, id);
  return out;
}

Statement make_commit() {
  Statement st;
  st.kind = StmtKind::Commit;
  st.ast = sql::CommitStmt{};
  return st;
}

Statement make_rollback() {
  Statement st;
  st.kind = StmtKind::Rollback;
  st.ast = sql::RollbackStmt{};
  return st;
}

std::vector<std::string> assigned_columns(const Statement& stmt) {
  std::vector<std::string> out;
  if (auto* up = std::get_if<sql::Update>(&stmt.ast)) {
    for (const auto& a : up->sets) out.push_back(a.column);
  }
  return out;
}

}  // namespace txpat
