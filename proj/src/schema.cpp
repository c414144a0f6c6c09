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

#include "txpat/schema.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "txpat/rng.hpp"
#include "txpat/text.hpp"

namespace txpat {

namespace {

constexpr std::int64_t kIntMin = -(std::int64_t{1} << 31);
constexpr std::int64_t kIntMax = (std::int64_t{1} << 31) - 1;

struct KeyRef {
  std::string table;
  std::string column;
  DataType type;
};

Value random_value(Rng& rng, DataType type, const SchemaConfig& cfg) {
  switch (type) {
    case DataType::Int: return Value(rng.uniform(kIntMin, kIntMax));
    case DataType::Text: return Value(rng.pick(cfg.text_pool));
    case DataType::Bool: return Value(rng.chance(0.5));
  }
  return Value::null();
}

Value unique_value(Rng& rng, DataType type, const SchemaConfig& cfg, const std::set<Value>& used) {
  for (;;) {
    Value v = type == DataType::Text
                  ? Value(rng.pick(cfg.text_pool) + "_" + std::to_string(rng.uniform(0, 99999)))
                  : Value(rng.uniform(kIntMin, kIntMax));
    if (!used.count(v)) return v;
  }
}

}  // namespace

int TableDef::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::iequals(columns[i].name, name)) return static_cast<int>(i);
  }
  return -1;
}

const ColumnDef* TableDef::column(const std::string& name) const {
  int i = column_index(name);
  return i < 0 ? nullptr : &columns[static_cast<std::size_t>(i)];
}

const std::vector<Value>* TableDef::row_by_id(std::int64_t id) const {
  int idx = column_index(kIdColumn);
  if (idx < 0) return nullptr;
  for (const auto& r : rows) {
    if (r[static_cast<std::size_t>(idx)].is_int() && r[static_cast<std::size_t>(idx)].as_int() == id) {
      return &r;
    }
  }
  return nullptr;
}

const TableDef* Schema::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (text::iequals(t.name, name)) return &t;
  }
  return nullptr;
}

TableDef* Schema::table(const std::string& name) {
  for (auto& t : tables) {
    if (text::iequals(t.name, name)) return &t;
  }
  return nullptr;
}

bool Schema::is_fk_parent(const std::string& name) const {
  return std::any_of(fk_edges.begin(), fk_edges.end(),
                     [&](const FkEdge& e) { return text::iequals(e.parent_table, name); });
}

Schema gen_schema(std::uint64_t seed, const SchemaConfig& cfg) {
  if (cfg.min_tables < 1 || cfg.max_tables > 4 || cfg.min_tables > cfg.max_tables) {
    throw std::invalid_argument("table count bounds must lie within 1..4");
  }
  if (cfg.min_columns < 1 || cfg.max_columns > 6 || cfg.min_columns > cfg.max_columns) {
    throw std::invalid_argument("column count bounds must lie within 1..6");
  }
  Rng rng(seed);
  Schema s;
  std::vector<KeyRef> keys;
  const int n_tables = static_cast<int>(rng.uniform(cfg.min_tables, cfg.max_tables));
  for (int ti = 0; ti < n_tables; ++ti) {
    TableDef t;
    t.name = "t" + std::to_string(ti);
    const int n_cols = static_cast<int>(rng.uniform(cfg.min_columns, cfg.max_columns));
    bool has_pk = false;
    for (int ci = 0; ci < n_cols; ++ci) {
      ColumnDef c;
      c.name = "c" + std::to_string(ci);
      double r = rng.unit();
      c.type = r < 0.55 ? DataType::Int : (r < 0.85 ? DataType::Text : DataType::Bool);
      if (ci == 0) {
        t.columns.push_back(c);
        continue;
      }
      if (c.type != DataType::Bool && !has_pk && rng.chance(cfg.primary_key_probability)) {
        c.primary_key = true;
        c.not_null = true;
        has_pk = true;
        if (c.type == DataType::Int && rng.chance(cfg.auto_increment_probability)) {
          c.auto_increment = true;
        }
      } else if (c.type != DataType::Bool && rng.chance(cfg.unique_probability)) {
        c.unique = true;
      } else if (rng.chance(cfg.fk_probability)) {
        std::vector<const KeyRef*> cands;
        for (const auto& k : keys) {
          if (k.type == c.type) cands.push_back(&k);
        }
        if (!cands.empty()) {
          const auto* k = cands[rng.index(cands.size())];
          c.fk = ForeignKey{k->table, k->column};
          c.not_null = true;
          s.fk_edges.push_back({t.name, c.name, k->table, k->column});
        }
      }
      t.columns.push_back(c);
    }
    ColumnDef id;
    id.name = kIdColumn;
    id.type = DataType::Int;
    id.not_null = true;
    id.unique = true;
    ColumnDef vers;
    vers.name = kVersColumn;
    vers.type = DataType::Int;
    vers.not_null = true;
    t.columns.push_back(id);
    t.columns.push_back(vers);
    for (const auto& c : t.columns) {
      if (c.is_candidate_key()) keys.push_back({t.name, c.name, c.type});
    }
    s.tables.push_back(std::move(t));
  }
  return s;
}

sql::CreateTable to_create_table(const TableDef& t) {
  sql::CreateTable ct;
  ct.name = t.name;
  for (const auto& c : t.columns) {
    sql::ColumnSpec spec;
    spec.name = c.name;
    spec.type = c.type;
    spec.primary_key = c.primary_key;
    spec.not_null = c.not_null;
    spec.unique = c.unique;
    spec.auto_increment = c.auto_increment;
    if (c.fk) spec.references = sql::ForeignKeySpec{c.fk->table, c.fk->column};
    ct.columns.push_back(std::move(spec));
  }
  return ct;
}

std::vector<std::string> emit_ddl(const Schema& s) {
  if (s.tables.empty()) throw std::invalid_argument("schema has no tables");
  std::vector<std::string> out;
  for (const auto& t : s.tables) out.push_back(sql::render(to_create_table(t)));
  return out;
}

std::vector<std::string> gen_seed_data(Schema& s, int rows_per_table, std::uint64_t seed,
                                       const SchemaConfig& cfg) {
  if (rows_per_table < 1) throw std::invalid_argument("rows_per_table must be >= 1");
  Rng rng(seed);
  s.inserted_keys.clear();
  for (auto& t : s.tables) {
    t.rows.clear();
    std::vector<std::set<Value>> used(t.columns.size());
    for (int r = 0; r < rows_per_table; ++r) {
      std::vector<Value> row;
      for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
        const auto& c = t.columns[ci];
        Value v;
        if (text::iequals(c.name, kIdColumn)) {
          v = Value(static_cast<std::int64_t>(r) + 1);
        } else if (text::iequals(c.name, kVersColumn)) {
          v = Value(std::int64_t{0});
        } else if (c.auto_increment) {
          v = Value(static_cast<std::int64_t>(r) + 1);
        } else if (c.fk) {
          const auto& parent = s.inserted_keys.at({c.fk->table, c.fk->column});
          v = parent[rng.index(parent.size())];
        } else if (c.is_candidate_key()) {
          v = unique_value(rng, c.type, cfg, used[ci]);
        } else {
          v = random_value(rng, c.type, cfg);
        }
        used[ci].insert(v);
        row.push_back(v);
      }
      for (std::size_t ci = 0; ci < t.columns.size(); ++ci) {
        if (t.columns[ci].is_candidate_key()) {
          s.inserted_keys[{t.name, t.columns[ci].name}].push_back(row[ci]);
        }
      }
      t.rows.push_back(std::move(row));
    }
  }
  return render_seed_data(s);
}

std::vector<std::string> render_seed_data(const Schema& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tables) {
    if (t.rows.empty()) continue;
    sql::Insert ins;
    ins.table = t.name;
    for (const auto& c : t.columns) ins.columns.push_back(c.name);
    for (const auto& r : t.rows) {
      std::vector<sql::ExprPtr> vals;
      for (const auto& v : r) vals.push_back(sql::make_literal(v));
      ins.rows.push_back(std::move(vals));
    }
    out.push_back(sql::render(ins));
  }
  return out;
}

Schema schema_from_ddl(const std::vector<std::string>& ddl) {
  Schema s;
  for (const auto& text : ddl) {
    auto stmt = sql::parse_statement(text);
    auto* ct = std::get_if<sql::CreateTable>(&stmt);
    if (!ct) continue;
    TableDef t;
    t.name = ct->name;
    for (const auto& spec : ct->columns) {
      ColumnDef c;
      c.name = spec.name;
      c.type = spec.type;
      c.primary_key = spec.primary_key;
      c.not_null = spec.not_null;
      c.unique = spec.unique;
      c.auto_increment = spec.auto_increment;
      if (spec.references) {
        c.fk = ForeignKey{spec.references->table, spec.references->column};
        s.fk_edges.push_back({t.name, c.name, c.fk->table, c.fk->column});
      }
      t.columns.push_back(std::move(c));
    }
    s.tables.push_back(std::move(t));
  }
  return s;
}

}  // namespace txpat
