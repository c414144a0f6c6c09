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

#include <algorithm>

#include "txpat/sql.hpp"
#include "txpat/text.hpp"

namespace txpat::sql {

namespace {

int precedence(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Binary:
      switch (e.binop) {
        case BinOp::Or: return 1;
        case BinOp::And: return 2;
        case BinOp::Add:
        case BinOp::Sub: return 5;
        case BinOp::Mul: return 6;
        default: return 4;
      }
    case Expr::Kind::Unary: return e.unop == UnOp::Not ? 3 : 7;
    case Expr::Kind::IsNull:
    case Expr::Kind::InList:
    case Expr::Kind::InSelect: return 4;
    default: return 8;
  }
}

std::string child(const Expr& e, int min_prec) {
  auto s = render(e);
  if (precedence(e) < min_prec) return "(" + s + ")";
  return s;
}

std::string render_ref(const TableRef& r) {
  std::string out;
  if (r.derived) {
    out = "(" + render(*r.derived) + ") AS " + r.alias;
  } else {
    out = r.table;
    if (!r.alias.empty()) out += " AS " + r.alias;
  }
  return out;
}

std::string render_column(const ColumnSpec& c) {
  std::string out = c.name + " " + std::string(to_string(c.type));
  if (c.not_null && !c.primary_key) out += " NOT NULL";
  if (c.primary_key) out += " PRIMARY KEY";
  if (c.unique) out += " UNIQUE";
  if (c.auto_increment) out += " AUTO_INCREMENT";
  if (c.default_value) out += " DEFAULT " + c.default_value->to_sql();
  return out;
}

}  // namespace

std::string_view to_string(BinOp op) {
  switch (op) {
    case BinOp::Eq: return "=";
    case BinOp::Ne: return "<>";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::And: return "AND";
    case BinOp::Or: return "OR";
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
  }
  return "?";
}

std::string_view to_string(JoinType type) {
  switch (type) {
    case JoinType::Inner: return "INNER JOIN";
    case JoinType::Left: return "LEFT JOIN";
    case JoinType::Right: return "RIGHT JOIN";
    case JoinType::Cross: return "CROSS JOIN";
  }
  return "?";
}

std::string_view to_sql(BeginVariant v) {
  switch (v) {
    case BeginVariant::Begin: return "BEGIN";
    case BeginVariant::StartTransaction: return "START TRANSACTION";
    case BeginVariant::ConsistentSnapshot: return "START TRANSACTION WITH CONSISTENT SNAPSHOT";
  }
  return "?";
}

std::string_view to_string(TriggerEvent e) {
  switch (e) {
    case TriggerEvent::Insert: return "INSERT";
    case TriggerEvent::Update: return "UPDATE";
    case TriggerEvent::Delete: return "DELETE";
  }
  return "?";
}

std::string render(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Literal: return e.literal.to_sql();
    case Expr::Kind::Column: return e.qualifier.empty() ? e.name : e.qualifier + "." + e.name;
    case Expr::Kind::Unary:
      if (e.unop == UnOp::Not) return "NOT " + child(*e.args[0], 3);
      return "-" + child(*e.args[0], 8);
    case Expr::Kind::Binary: {
      int p = precedence(e);
      // Comparisons are non-associative; arithmetic is left-associative.
      int lp = p == 4 ? 5 : p;
      int rp = p + 1;
      if (e.binop == BinOp::And || e.binop == BinOp::Or) rp = p;
      return child(*e.args[0], lp) + " " + std::string(to_string(e.binop)) + " " +
             child(*e.args[1], rp);
    }
    case Expr::Kind::IsNull:
      return child(*e.args[0], 5) + (e.negated ? " IS NOT NULL" : " IS NULL");
    case Expr::Kind::InList: {
      std::vector<std::string> parts;
      for (std::size_t i = 1; i < e.args.size(); ++i) parts.push_back(render(*e.args[i]));
      return child(*e.args[0], 5) + (e.negated ? " NOT IN (" : " IN (") + text::join(parts, ", ") +
             ")";
    }
    case Expr::Kind::InSelect:
      return child(*e.args[0], 5) + (e.negated ? " NOT IN (" : " IN (") + render(*e.subquery) + ")";
    case Expr::Kind::Call: {
      std::vector<std::string> parts;
      for (const auto& a : e.args) parts.push_back(render(*a));
      return e.name + "(" + text::join(parts, ", ") + ")";
    }
  }
  return "?";
}

std::string render(const Select& s) {
  std::vector<std::string> items;
  for (const auto& it : s.items) {
    if (it.star) {
      items.push_back(it.star_qualifier.empty() ? "*" : it.star_qualifier + ".*");
    } else {
      items.push_back(render(*it.expr) + (it.alias.empty() ? "" : " AS " + it.alias));
    }
  }
  std::string out = "SELECT " + text::join(items, ", ");
  if (s.from) {
    out += " FROM " + render_ref(*s.from);
    for (const auto& j : s.joins) {
      out += " " + std::string(to_string(j.type)) + " " + render_ref(j.ref);
      if (j.on) out += " ON " + render(*j.on);
    }
  }
  if (s.where) out += " WHERE " + render(*s.where);
  if (!s.order_by.empty()) {
    std::vector<std::string> parts;
    for (const auto& o : s.order_by) parts.push_back(render(*o.expr) + (o.desc ? " DESC" : ""));
    out += " ORDER BY " + text::join(parts, ", ");
  }
  if (s.limit) out += " LIMIT " + std::to_string(*s.limit);
  return out;
}

std::string render(const CreateTable& ct) {
  std::vector<std::string> parts;
  for (const auto& c : ct.columns) parts.push_back(render_column(c));
  for (const auto& c : ct.columns) {
    if (c.references) {
      parts.push_back("FOREIGN KEY (" + c.name + ") REFERENCES " + c.references->table + "(" +
                      c.references->column + ")");
    }
  }
  return std::string("CREATE TABLE ") + (ct.if_not_exists ? "IF NOT EXISTS " : "") + ct.name +
         " (" + text::join(parts, ", ") + ")";
}

std::string render(const Insert& ins) {
  std::string out = "INSERT INTO " + ins.table;
  if (!ins.columns.empty()) out += " (" + text::join(ins.columns, ", ") + ")";
  out += " VALUES ";
  std::vector<std::string> rows;
  for (const auto& row : ins.rows) {
    std::vector<std::string> vals;
    for (const auto& v : row) vals.push_back(render(*v));
    rows.push_back("(" + text::join(vals, ", ") + ")");
  }
  return out + text::join(rows, ", ");
}

std::string render(const Statement& stmt) {
  struct Visitor {
    std::string operator()(const CreateTable& ct) const { return render(ct); }
    std::string operator()(const CreateTrigger& tr) const {
      std::string out = "CREATE TRIGGER " + tr.name + " AFTER " + std::string(to_string(tr.event)) +
                        " ON " + tr.table + " FOR EACH ROW BEGIN";
      for (const auto& ins : tr.body) out += " " + render(ins) + ";";
      return out + " END";
    }
    std::string operator()(const Insert& ins) const { return render(ins); }
    std::string operator()(const Update& up) const {
      std::vector<std::string> sets;
      for (const auto& a : up.sets) sets.push_back(a.column + " = " + render(*a.value));
      std::string out = "UPDATE " + up.table + " SET " + text::join(sets, ", ");
      if (up.where) out += " WHERE " + render(*up.where);
      return out;
    }
    std::string operator()(const Delete& del) const {
      std::string out = "DELETE FROM " + del.table;
      if (del.where) out += " WHERE " + render(*del.where);
      return out;
    }
    std::string operator()(const Select& s) const { return render(s); }
    std::string operator()(const BeginStmt& b) const { return std::string(to_sql(b.variant)); }
    std::string operator()(const CommitStmt&) const { return "COMMIT"; }
    std::string operator()(const RollbackStmt&) const { return "ROLLBACK"; }
    std::string operator()(const SetIsolation& s) const {
      return "SET SESSION TRANSACTION ISOLATION LEVEL " + std::string(sql_name(s.level));
    }
  };
  return std::visit(Visitor{}, stmt);
}

void collect_tables(const Expr& e, std::vector<std::string>& out) {
  for (const auto& a : e.args) {
    if (a) collect_tables(*a, out);
  }
  if (e.subquery) collect_tables(*e.subquery, out);
}

namespace {
void add_table(const std::string& t, std::vector<std::string>& out) {
  for (const auto& x : out) {
    if (text::iequals(x, t)) return;
  }
  out.push_back(t);
}

void collect_ref(const TableRef& r, std::vector<std::string>& out) {
  if (r.derived) {
    collect_tables(*r.derived, out);
  } else {
    add_table(r.table, out);
  }
}
}  // namespace

void collect_tables(const Select& s, std::vector<std::string>& out) {
  if (s.from) collect_ref(*s.from, out);
  for (const auto& j : s.joins) {
    collect_ref(j.ref, out);
    if (j.on) collect_tables(*j.on, out);
  }
  for (const auto& it : s.items) {
    if (it.expr) collect_tables(*it.expr, out);
  }
  if (s.where) collect_tables(*s.where, out);
}

std::vector<std::string> referenced_tables(const Statement& stmt) {
  std::vector<std::string> out;
  if (auto* s = std::get_if<Select>(&stmt)) {
    collect_tables(*s, out);
  } else if (auto* u = std::get_if<Update>(&stmt)) {
    add_table(u->table, out);
    for (const auto& a : u->sets) collect_tables(*a.value, out);
    if (u->where) collect_tables(*u->where, out);
  } else if (auto* d = std::get_if<Delete>(&stmt)) {
    add_table(d->table, out);
    if (d->where) collect_tables(*d->where, out);
  } else if (auto* i = std::get_if<Insert>(&stmt)) {
    add_table(i->table, out);
  } else if (auto* c = std::get_if<CreateTable>(&stmt)) {
    add_table(c->name, out);
  } else if (auto* t = std::get_if<CreateTrigger>(&stmt)) {
    add_table(t->table, out);
  }
  return out;
}

}  // namespace txpat::sql
