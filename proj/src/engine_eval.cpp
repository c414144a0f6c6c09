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
#include <cstdlib>

#include "engine_internal.hpp"
#include "txpat/text.hpp"

namespace txpat::engine::detail {

namespace {

Value from_bool(std::optional<bool> b) { return b ? Value(*b) : Value::null(); }

std::optional<std::int64_t> to_number(const Value& v) {
  if (auto n = v.numeric()) return n;
  if (v.is_text()) {
    const auto& s = v.as_text();
    char* end = nullptr;
    long long x = std::strtoll(s.c_str(), &end, 10);
    return end == s.c_str() ? 0 : static_cast<std::int64_t>(x);
  }
  return std::nullopt;
}

std::string output_name(const sql::SelectItem& item) {
  if (!item.alias.empty()) return item.alias;
  if (item.expr->kind == sql::Expr::Kind::Column) return item.expr->name;
  return sql::render(*item.expr);
}

Tuple concat(const Tuple& a, const Tuple& b) {
  Tuple t = a;
  t.vals.insert(t.vals.end(), b.vals.begin(), b.vals.end());
  t.prov.insert(t.prov.end(), b.prov.begin(), b.prov.end());
  return t;
}

Tuple nulls(std::size_t width) {
  Tuple t;
  t.vals.assign(width, Value::null());
  return t;
}

std::optional<bool> in_values(const Value& lhs, const std::vector<Value>& vals, bool negated) {
  if (lhs.is_null()) return std::nullopt;
  bool saw_null = false;
  for (const auto& v : vals) {
    auto c = sql_compare(lhs, v);
    if (!c) {
      saw_null = true;
    } else if (*c == 0) {
      return !negated;
    }
  }
  if (saw_null) return std::nullopt;
  return negated;
}

}  // namespace

void Shape::add(std::string name, std::vector<std::string> cols) {
  Src s{std::move(name), std::move(cols), width};
  width += s.cols.size();
  srcs.push_back(std::move(s));
}

void StmtCtx::note_read(const TouchedRow& r) {
  if (touched_seen.insert(r).second) touched.push_back(r);
}

bool StmtCtx::eval_true(const sql::ExprPtr& e, const Env* env) {
  if (!e) return true;
  auto t = eval(*e, env).truth();
  return t && *t;
}

Value StmtCtx::eval(const sql::Expr& e, const Env* env) {
  using K = sql::Expr::Kind;
  switch (e.kind) {
    case K::Literal: return e.literal;
    case K::Column: return column(e, env);
    case K::Unary: {
      Value v = eval(*e.args.at(0), env);
      if (e.unop == sql::UnOp::Not) {
        auto t = v.truth();
        return t ? Value(!*t) : Value::null();
      }
      auto n = to_number(v);
      return n ? Value(-*n) : Value::null();
    }
    case K::Binary: {
      if (e.binop == sql::BinOp::And || e.binop == sql::BinOp::Or) {
        auto a = eval(*e.args.at(0), env).truth();
        const bool is_and = e.binop == sql::BinOp::And;
        if (a && *a != is_and) return Value(!is_and);
        auto b = eval(*e.args.at(1), env).truth();
        if (b && *b != is_and) return Value(!is_and);
        if (a && b) return Value(is_and);
        return Value::null();
      }
      Value a = eval(*e.args.at(0), env);
      Value b = eval(*e.args.at(1), env);
      switch (e.binop) {
        case sql::BinOp::Add:
        case sql::BinOp::Sub:
        case sql::BinOp::Mul: {
          auto x = to_number(a);
          auto y = to_number(b);
          if (!x || !y) return Value::null();
          if (e.binop == sql::BinOp::Add) return Value(*x + *y);
          if (e.binop == sql::BinOp::Sub) return Value(*x - *y);
          return Value(*x * *y);
        }
        default: break;
      }
      auto c = sql_compare(a, b);
      if (!c) return Value::null();
      switch (e.binop) {
        case sql::BinOp::Eq: return Value(*c == 0);
        case sql::BinOp::Ne: return Value(*c != 0);
        case sql::BinOp::Lt: return Value(*c < 0);
        case sql::BinOp::Le: return Value(*c <= 0);
        case sql::BinOp::Gt: return Value(*c > 0);
        case sql::BinOp::Ge: return Value(*c >= 0);
        default: return Value::null();
      }
    }
    case K::IsNull: return Value(eval(*e.args.at(0), env).is_null() != e.negated);
    case K::InList: {
      Value lhs = eval(*e.args.at(0), env);
      std::vector<Value> vals;
      for (std::size_t i = 1; i < e.args.size(); ++i) vals.push_back(eval(*e.args[i], env));
      return from_bool(in_values(lhs, vals, e.negated));
    }
    case K::InSelect: {
      Value lhs = eval(*e.args.at(0), env);
      auto qr = select(*e.subquery, env);
      if (qr.columns.size() != 1) throw SqlError(ErrorClass::Other, "Operand should contain 1 column(s)");
      std::vector<Value> vals;
      for (const auto& r : qr.rows) {
        for (const auto& p : r.prov) note_read(p);
        vals.push_back(r.vals.at(0));
      }
      return from_bool(in_values(lhs, vals, e.negated));
    }
    case K::Call: return call(e, env);
  }
  return Value::null();
}

Value StmtCtx::column(const sql::Expr& e, const Env* env) {
  for (const Env* cur = env; cur; cur = cur->parent) {
    const Value* found = nullptr;
    int matches = 0;
    for (const auto& src : cur->shape->srcs) {
      if (!e.qualifier.empty() && !text::iequals(src.name, e.qualifier)) continue;
      for (std::size_t i = 0; i < src.cols.size(); ++i) {
        if (text::iequals(src.cols[i], e.name)) {
          ++matches;
          found = &cur->tuple->vals.at(src.off + i);
        }
      }
    }
    if (matches > 1) {
      throw SqlError(ErrorClass::SemanticError, "Column '" + e.name + "' in where clause is ambiguous");
    }
    if (found) return *found;
  }
  std::string full = e.qualifier.empty() ? e.name : e.qualifier + "." + e.name;
  throw SqlError(ErrorClass::SemanticError, "Unknown column '" + full + "' in 'field list'");
}

Value StmtCtx::call(const sql::Expr& e, const Env* env) {
  const auto& f = e.name;
  if (f == "CONNECTION_ID") return Value(static_cast<std::int64_t>(sess.id));
  if (f == "SYSDATE" || f == "NOW" || f == "CURRENT_TIMESTAMP") return Value(format_datetime_us(now));
  if (f == "ABS" && e.args.size() == 1) {
    auto n = to_number(eval(*e.args[0], env));
    return n ? Value(*n < 0 ? -*n : *n) : Value::null();
  }
  if (f == "COALESCE") {
    for (const auto& a : e.args) {
      Value v = eval(*a, env);
      if (!v.is_null()) return v;
    }
    return Value::null();
  }
  if (f == "LENGTH" && e.args.size() == 1) {
    Value v = eval(*e.args[0], env);
    if (v.is_null()) return v;
    return Value(static_cast<std::int64_t>(v.to_display().size()));
  }
  throw SqlError(ErrorClass::SemanticError, "FUNCTION " + f + " does not exist");
}

Relation StmtCtx::scan(int table, const std::string& exposed) {
  view_used = true;
  const Table& t = db.tables[static_cast<std::size_t>(table)];
  Relation rel;
  std::vector<std::string> cols;
  for (const auto& c : t.columns) cols.push_back(c.name);
  rel.shape.add(exposed, std::move(cols));
  if (ser_locking && !point_read) locks.push_back({{table, 0}, LockMode::S});
  for (const auto& row : t.rows) {
    const Version* v = db.visible(row, txn, view);
    if (!v) continue;
    read_rows.insert({table, row.rowid});
    Tuple tup;
    tup.vals = v->values;
    tup.prov.push_back({t.name, db.reported_id(t, row, *v), v->vers, TouchKind::Read});
    rel.tuples.push_back(std::move(tup));
  }
  return rel;
}

Relation StmtCtx::source(const sql::TableRef& ref, const Env* outer) {
  (void)outer;
  if (ref.derived) {
    auto qr = select(*ref.derived, nullptr);
    Relation rel;
    rel.shape.add(ref.alias, qr.columns);
    for (auto& r : qr.rows) rel.tuples.push_back(std::move(r));
    return rel;
  }
  int idx = 0;
  db.table_or_throw(ref.table, &idx);
  return scan(idx, ref.exposed_name());
}

Relation StmtCtx::from_clause(const sql::Select& s, const Env* outer) {
  if (!s.from) {
    Relation rel;
    rel.tuples.emplace_back();
    return rel;
  }
  Relation rel = source(*s.from, outer);
  for (const auto& j : s.joins) {
    Relation rhs = source(j.ref, outer);
    Relation out;
    out.shape = rel.shape;
    for (const auto& src : rhs.shape.srcs) out.shape.add(src.name, src.cols);
    auto on_ok = [&](const Tuple& t) {
      Env env{&out.shape, &t, outer};
      return j.type == sql::JoinType::Cross || eval_true(j.on, &env);
    };
    if (j.type == sql::JoinType::Right) {
      for (const auto& r : rhs.tuples) {
        bool any = false;
        for (const auto& l : rel.tuples) {
          Tuple t = concat(l, r);
          if (on_ok(t)) {
            out.tuples.push_back(std::move(t));
            any = true;
          }
        }
        if (!any) out.tuples.push_back(concat(nulls(rel.shape.width), r));
      }
    } else {
      for (const auto& l : rel.tuples) {
        bool any = false;
        for (const auto& r : rhs.tuples) {
          Tuple t = concat(l, r);
          if (on_ok(t)) {
            out.tuples.push_back(std::move(t));
            any = true;
          }
        }
        if (!any && j.type == sql::JoinType::Left) out.tuples.push_back(concat(l, nulls(rhs.shape.width)));
      }
    }
    rel = std::move(out);
  }
  return rel;
}

QueryResult StmtCtx::select(const sql::Select& s, const Env* outer) {
  Relation rel = from_clause(s, outer);
  std::vector<const Tuple*> kept;
  for (const auto& t : rel.tuples) {
    Env env{&rel.shape, &t, outer};
    if (eval_true(s.where, &env)) kept.push_back(&t);
  }

  QueryResult qr;
  struct ItemPlan {
    const sql::SelectItem* item;
    std::vector<std::size_t> cols;  // star expansion
  };
  std::vector<ItemPlan> plan;
  for (const auto& item : s.items) {
    ItemPlan p{&item, {}};
    if (item.star) {
      bool matched = false;
      for (const auto& src : rel.shape.srcs) {
        if (!item.star_qualifier.empty() && !text::iequals(src.name, item.star_qualifier)) continue;
        matched = true;
        for (std::size_t i = 0; i < src.cols.size(); ++i) {
          p.cols.push_back(src.off + i);
          qr.columns.push_back(src.cols[i]);
        }
      }
      if (!matched && !item.star_qualifier.empty()) {
        throw SqlError(ErrorClass::SemanticError, "Unknown table '" + item.star_qualifier + "'");
      }
    } else {
      qr.columns.push_back(output_name(item));
    }
    plan.push_back(std::move(p));
  }

  std::vector<Tuple> out;
  out.reserve(kept.size());
  for (const Tuple* t : kept) {
    Env env{&rel.shape, t, outer};
    Tuple o;
    for (const auto& p : plan) {
      if (p.item->star) {
        for (auto c : p.cols) o.vals.push_back(t->vals[c]);
      } else {
        o.vals.push_back(eval(*p.item->expr, &env));
      }
    }
    o.prov = t->prov;
    out.push_back(std::move(o));
  }

  if (!s.order_by.empty()) {
    std::vector<std::vector<Value>> keys(out.size());
    for (std::size_t r = 0; r < out.size(); ++r) {
      Env env{&rel.shape, kept[r], outer};
      for (const auto& ob : s.order_by) {
        const auto& e = *ob.expr;
        std::optional<Value> k;
        if (e.kind == sql::Expr::Kind::Column && e.qualifier.empty()) {
          std::size_t col = 0;
          for (const auto& p : plan) {
            if (!p.item->star && !p.item->alias.empty() && text::iequals(p.item->alias, e.name)) {
              k = out[r].vals[col];
              break;
            }
            col += p.item->star ? p.cols.size() : 1;
          }
        }
        keys[r].push_back(k ? *k : eval(e, &env));
      }
    }
    std::vector<std::size_t> idx(out.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      for (std::size_t k = 0; k < s.order_by.size(); ++k) {
        auto c = keys[a][k] <=> keys[b][k];
        if (c == 0) continue;
        return s.order_by[k].desc ? c > 0 : c < 0;
      }
      return false;
    });
    std::vector<Tuple> sorted;
    sorted.reserve(out.size());
    for (auto i : idx) sorted.push_back(std::move(out[i]));
    out = std::move(sorted);
  }
  if (s.limit && static_cast<std::int64_t>(out.size()) > *s.limit) {
    out.resize(static_cast<std::size_t>(std::max<std::int64_t>(0, *s.limit)));
  }
  qr.rows = std::move(out);
  return qr;
}

}  // namespace txpat::engine::detail
