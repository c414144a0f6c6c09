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

#include <cctype>
#include <limits>

#include "txpat/sql.hpp"
#include "txpat/text.hpp"

namespace txpat::sql {

namespace {

enum class Tok : std::uint8_t { Ident, QuotedIdent, Number, String, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t pos = 0;
};

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw SqlSyntaxError("You have an error in your SQL syntax; " + msg + " at offset " +
                             std::to_string(i),
                         i);
  };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
      auto end = s.find("*/", i + 2);
      if (end == std::string_view::npos) fail("unterminated comment");
      i = end + 2;
      continue;
    }
    Token t;
    t.pos = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t b = i;
      while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '$')) ++i;
      t.kind = Tok::Ident;
      t.text = std::string(s.substr(b, i - b));
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t b = i;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
      t.kind = Tok::Number;
      t.text = std::string(s.substr(b, i - b));
    } else if (c == '\'' || c == '"') {
      char q = c;
      ++i;
      std::string v;
      for (;;) {
        if (i >= s.size()) fail("unterminated string literal");
        if (s[i] == q) {
          if (i + 1 < s.size() && s[i + 1] == q) {
            v += q;
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        if (s[i] == '\\' && i + 1 < s.size()) {
          v += s[i + 1];
          i += 2;
          continue;
        }
        v += s[i++];
      }
      t.kind = Tok::String;
      t.text = std::move(v);
    } else if (c == '`') {
      auto end = s.find('`', i + 1);
      if (end == std::string_view::npos) fail("unterminated quoted identifier");
      t.kind = Tok::QuotedIdent;
      t.text = std::string(s.substr(i + 1, end - i - 1));
      i = end + 1;
    } else {
      static constexpr std::string_view two[] = {"<=", ">=", "<>", "!="};
      t.kind = Tok::Symbol;
      bool matched = false;
      for (auto op : two) {
        if (s.substr(i, 2) == op) {
          t.text = std::string(op);
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("(),;.*=<>+-").find(c) == std::string_view::npos) {
          fail(std::string("unexpected character '") + c + "'");
        }
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

bool is_reserved(std::string_view w) {
  static constexpr std::string_view kw[] = {
      "SELECT", "FROM",  "WHERE", "AND",   "OR",    "NOT",    "IN",     "IS",   "NULL",
      "JOIN",   "INNER", "LEFT",  "RIGHT", "CROSS", "ON",     "ORDER",  "BY",   "LIMIT",
      "AS",     "SET",   "VALUES", "INTO", "OUTER", "ASC",    "DESC",   "TRUE", "FALSE",
      "UPDATE", "DELETE", "INSERT", "BEGIN", "END", "COMMIT", "ROLLBACK", "FOR"};
  for (auto k : kw) {
    if (text::iequals(w, k)) return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  Statement statement() {
    Statement st = statement_body();
    accept_symbol(";");
    if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
    return st;
  }

  ExprPtr expression_only() {
    auto e = expr();
    if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t p_ = 0;

  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(p_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = toks_[p_];
    if (p_ + 1 < toks_.size()) ++p_;
    return t;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const auto& t = peek();
    throw SqlSyntaxError("You have an error in your SQL syntax; " + msg + " near position " +
                             std::to_string(t.pos),
                         t.pos);
  }

  bool is_kw(const Token& t, std::string_view kw) const {
    return t.kind == Tok::Ident && text::iequals(t.text, kw);
  }
  bool peek_kw(std::string_view kw, std::size_t ahead = 0) const { return is_kw(peek(ahead), kw); }
  bool accept_kw(std::string_view kw) {
    if (peek_kw(kw)) {
      next();
      return true;
    }
    return false;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected " + std::string(kw));
  }
  bool peek_symbol(std::string_view s) const {
    return peek().kind == Tok::Symbol && peek().text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (peek_symbol(s)) {
      next();
      return true;
    }
    return false;
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
  }

  std::string identifier() {
    const auto& t = peek();
    if (t.kind == Tok::QuotedIdent || (t.kind == Tok::Ident && !is_reserved(t.text))) {
      return next().text;
    }
    fail("expected an identifier");
  }

  std::int64_t integer() {
    bool neg = accept_symbol("-");
    if (peek().kind != Tok::Number) fail("expected a number");
    return to_int(next().text, neg);
  }

  std::int64_t to_int(const std::string& digits, bool neg) {
    // Accumulate negatively so INT64_MIN parses.
    std::int64_t v = 0;
    for (char c : digits) {
      int d = c - '0';
      if (v < (std::numeric_limits<std::int64_t>::min() + d) / 10) fail("integer literal out of range");
      v = v * 10 - d;
    }
    if (!neg) {
      if (v == std::numeric_limits<std::int64_t>::min()) fail("integer literal out of range");
      v = -v;
    }
    return v;
  }

  Statement statement_body() {
    if (peek_kw("SELECT")) return select();
    if (accept_kw("INSERT")) return insert_rest();
    if (accept_kw("UPDATE")) return update_rest();
    if (accept_kw("DELETE")) return delete_rest();
    if (accept_kw("CREATE")) {
      if (accept_kw("TABLE")) return create_table_rest();
      if (accept_kw("TRIGGER")) return create_trigger_rest();
      fail("expected TABLE or TRIGGER after CREATE");
    }
    if (accept_kw("BEGIN")) {
      accept_kw("WORK");
      return BeginStmt{BeginVariant::Begin};
    }
    if (accept_kw("START")) {
      expect_kw("TRANSACTION");
      if (accept_kw("WITH")) {
        expect_kw("CONSISTENT");
        expect_kw("SNAPSHOT");
        return BeginStmt{BeginVariant::ConsistentSnapshot};
      }
      return BeginStmt{BeginVariant::StartTransaction};
    }
    if (accept_kw("COMMIT")) {
      accept_kw("WORK");
      return CommitStmt{};
    }
    if (accept_kw("ROLLBACK")) {
      accept_kw("WORK");
      return RollbackStmt{};
    }
    if (accept_kw("SET")) return set_rest();
    fail("unsupported statement");
  }

  SetIsolation set_rest() {
    if (!accept_kw("SESSION")) accept_kw("LOCAL");
    expect_kw("TRANSACTION");
    expect_kw("ISOLATION");
    expect_kw("LEVEL");
    if (accept_kw("READ")) {
      if (accept_kw("UNCOMMITTED")) return {IsolationLevel::RU};
      expect_kw("COMMITTED");
      return {IsolationLevel::RC};
    }
    if (accept_kw("REPEATABLE")) {
      expect_kw("READ");
      return {IsolationLevel::RR};
    }
    expect_kw("SERIALIZABLE");
    return {IsolationLevel::SER};
  }

  DataType data_type() {
    auto t = identifier();
    auto u = text::to_upper(t);
    DataType dt;
    if (u == "INT" || u == "INTEGER" || u == "BIGINT" || u == "SMALLINT" || u == "TINYINT" ||
        u == "MEDIUMINT") {
      dt = DataType::Int;
    } else if (u == "TEXT" || u == "VARCHAR" || u == "CHAR" || u == "STRING") {
      dt = DataType::Text;
    } else if (u == "BOOL" || u == "BOOLEAN") {
      dt = DataType::Bool;
    } else {
      fail("unsupported column type " + t);
    }
    if (accept_symbol("(")) {
      integer();
      expect_symbol(")");
    }
    return dt;
  }

  ColumnSpec* find_col(CreateTable& ct, const std::string& name) {
    for (auto& c : ct.columns) {
      if (text::iequals(c.name, name)) return &c;
    }
    fail("key column '" + name + "' doesn't exist in table");
  }

  std::string paren_column() {
    expect_symbol("(");
    auto c = identifier();
    if (peek_symbol(",")) fail("composite keys are not supported");
    expect_symbol(")");
    return c;
  }

  ForeignKeySpec references_rest() {
    ForeignKeySpec fk;
    fk.table = identifier();
    fk.column = paren_column();
    return fk;
  }

  CreateTable create_table_rest() {
    CreateTable ct;
    if (accept_kw("IF")) {
      expect_kw("NOT");
      expect_kw("EXISTS");
      ct.if_not_exists = true;
    }
    ct.name = identifier();
    expect_symbol("(");
    do {
      if (accept_kw("CONSTRAINT") && !peek_kw("PRIMARY") && !peek_kw("UNIQUE") &&
          !peek_kw("FOREIGN")) {
        identifier();
      }
      if (accept_kw("PRIMARY")) {
        expect_kw("KEY");
        auto* c = find_col(ct, paren_column());
        c->primary_key = true;
        c->not_null = true;
      } else if (peek_kw("UNIQUE") && (peek_kw("KEY", 1) || peek_kw("INDEX", 1) ||
                                       (peek(1).kind == Tok::Symbol && peek(1).text == "("))) {
        next();
        if (!accept_kw("KEY")) accept_kw("INDEX");
        find_col(ct, paren_column())->unique = true;
      } else if (accept_kw("FOREIGN")) {
        expect_kw("KEY");
        auto* c = find_col(ct, paren_column());
        expect_kw("REFERENCES");
        c->references = references_rest();
      } else {
        ct.columns.push_back(column_def());
      }
    } while (accept_symbol(","));
    expect_symbol(")");
    if (ct.columns.empty()) fail("a table must have at least one column");
    return ct;
  }

  ColumnSpec column_def() {
    ColumnSpec c;
    c.name = identifier();
    c.type = data_type();
    for (;;) {
      if (accept_kw("PRIMARY")) {
        expect_kw("KEY");
        c.primary_key = true;
        c.not_null = true;
      } else if (accept_kw("NOT")) {
        expect_kw("NULL");
        c.not_null = true;
      } else if (accept_kw("NULL")) {
        c.not_null = false;
      } else if (accept_kw("UNIQUE")) {
        accept_kw("KEY");
        c.unique = true;
      } else if (accept_kw("AUTO_INCREMENT")) {
        c.auto_increment = true;
      } else if (accept_kw("REFERENCES")) {
        c.references = references_rest();
      } else if (accept_kw("DEFAULT")) {
        auto e = primary();
        if (e->kind != Expr::Kind::Literal) fail("DEFAULT must be a literal");
        c.default_value = e->literal;
      } else {
        break;
      }
    }
    return c;
  }

  CreateTrigger create_trigger_rest() {
    CreateTrigger tr;
    tr.name = identifier();
    expect_kw("AFTER");
    if (accept_kw("INSERT")) {
      tr.event = TriggerEvent::Insert;
    } else if (accept_kw("UPDATE")) {
      tr.event = TriggerEvent::Update;
    } else if (accept_kw("DELETE")) {
      tr.event = TriggerEvent::Delete;
    } else {
      fail("expected INSERT, UPDATE or DELETE");
    }
    expect_kw("ON");
    tr.table = identifier();
    expect_kw("FOR");
    expect_kw("EACH");
    expect_kw("ROW");
    if (accept_kw("BEGIN")) {
      while (!accept_kw("END")) {
        expect_kw("INSERT");
        tr.body.push_back(insert_rest());
        expect_symbol(";");
      }
    } else {
      expect_kw("INSERT");
      tr.body.push_back(insert_rest());
    }
    return tr;
  }

  Insert insert_rest() {
    Insert ins;
    expect_kw("INTO");
    ins.table = identifier();
    if (accept_symbol("(")) {
      do {
        ins.columns.push_back(identifier());
      } while (accept_symbol(","));
      expect_symbol(")");
    }
    if (!accept_kw("VALUES")) expect_kw("VALUE");
    do {
      expect_symbol("(");
      std::vector<ExprPtr> row;
      do {
        row.push_back(expr());
      } while (accept_symbol(","));
      expect_symbol(")");
      if (!ins.columns.empty() && row.size() != ins.columns.size()) {
        fail("column count doesn't match value count");
      }
      ins.rows.push_back(std::move(row));
    } while (accept_symbol(","));
    return ins;
  }

  Update update_rest() {
    Update up;
    up.table = identifier();
    expect_kw("SET");
    do {
      Assignment a;
      a.column = identifier();
      if (accept_symbol(".")) a.column = identifier();
      expect_symbol("=");
      a.value = expr();
      up.sets.push_back(std::move(a));
    } while (accept_symbol(","));
    if (accept_kw("WHERE")) up.where = expr();
    return up;
  }

  Delete delete_rest() {
    Delete del;
    expect_kw("FROM");
    del.table = identifier();
    if (accept_kw("WHERE")) del.where = expr();
    return del;
  }

  Select select() {
    expect_kw("SELECT");
    Select s;
    do {
      SelectItem item;
      if (accept_symbol("*")) {
        item.star = true;
      } else if ((peek().kind == Tok::Ident || peek().kind == Tok::QuotedIdent) &&
                 peek(1).kind == Tok::Symbol && peek(1).text == "." && peek(2).kind == Tok::Symbol &&
                 peek(2).text == "*") {
        item.star = true;
        item.star_qualifier = next().text;
        next();
        next();
      } else {
        item.expr = expr();
        if (accept_kw("AS")) {
          item.alias = identifier();
        } else if (peek().kind == Tok::QuotedIdent ||
                   (peek().kind == Tok::Ident && !is_reserved(peek().text))) {
          item.alias = identifier();
        }
      }
      s.items.push_back(std::move(item));
    } while (accept_symbol(","));
    if (accept_kw("FROM")) {
      s.from = table_ref();
      for (;;) {
        Join j;
        if (accept_kw("INNER")) {
          expect_kw("JOIN");
          j.type = JoinType::Inner;
        } else if (accept_kw("JOIN")) {
          j.type = JoinType::Inner;
        } else if (accept_kw("LEFT")) {
          accept_kw("OUTER");
          expect_kw("JOIN");
          j.type = JoinType::Left;
        } else if (accept_kw("RIGHT")) {
          accept_kw("OUTER");
          expect_kw("JOIN");
          j.type = JoinType::Right;
        } else if (accept_kw("CROSS")) {
          expect_kw("JOIN");
          j.type = JoinType::Cross;
        } else {
          break;
        }
        j.ref = table_ref();
        if (j.type != JoinType::Cross) {
          expect_kw("ON");
          j.on = expr();
        } else if (accept_kw("ON")) {
          j.on = expr();
        }
        s.joins.push_back(std::move(j));
      }
    }
    if (accept_kw("WHERE")) s.where = expr();
    if (accept_kw("ORDER")) {
      expect_kw("BY");
      do {
        OrderItem o;
        o.expr = expr();
        if (accept_kw("DESC")) {
          o.desc = true;
        } else {
          accept_kw("ASC");
        }
        s.order_by.push_back(std::move(o));
      } while (accept_symbol(","));
    }
    if (accept_kw("LIMIT")) {
      auto n = integer();
      if (n < 0) fail("LIMIT must be non-negative");
      s.limit = n;
    }
    return s;
  }

  TableRef table_ref() {
    TableRef r;
    if (accept_symbol("(")) {
      if (!peek_kw("SELECT")) fail("expected a subquery");
      r.derived = std::make_shared<const Select>(select());
      expect_symbol(")");
      accept_kw("AS");
      r.alias = identifier();
      return r;
    }
    r.table = identifier();
    if (accept_kw("AS")) {
      r.alias = identifier();
    } else if (peek().kind == Tok::QuotedIdent ||
               (peek().kind == Tok::Ident && !is_reserved(peek().text))) {
      r.alias = identifier();
    }
    return r;
  }

  // Precedence climbing: OR < AND < NOT < comparison < additive < multiplicative.
  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    auto lhs = and_expr();
    while (accept_kw("OR")) lhs = make_binary(BinOp::Or, lhs, and_expr());
    return lhs;
  }

  ExprPtr and_expr() {
    auto lhs = not_expr();
    while (accept_kw("AND")) lhs = make_binary(BinOp::And, lhs, not_expr());
    return lhs;
  }

  ExprPtr not_expr() {
    if (accept_kw("NOT")) return make_unary(UnOp::Not, not_expr());
    return comparison();
  }

  ExprPtr comparison() {
    auto lhs = additive();
    for (;;) {
      if (peek().kind == Tok::Symbol) {
        const auto& s = peek().text;
        BinOp op;
        if (s == "=") {
          op = BinOp::Eq;
        } else if (s == "<>" || s == "!=") {
          op = BinOp::Ne;
        } else if (s == "<") {
          op = BinOp::Lt;
        } else if (s == "<=") {
          op = BinOp::Le;
        } else if (s == ">") {
          op = BinOp::Gt;
        } else if (s == ">=") {
          op = BinOp::Ge;
        } else {
          return lhs;
        }
        next();
        lhs = make_binary(op, lhs, additive());
        continue;
      }
      if (accept_kw("IS")) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::IsNull;
        e->negated = accept_kw("NOT");
        expect_kw("NULL");
        e->args.push_back(lhs);
        lhs = e;
        continue;
      }
      bool negated = false;
      if (peek_kw("NOT") && peek_kw("IN", 1)) {
        next();
        negated = true;
      }
      if (accept_kw("IN")) {
        auto e = std::make_shared<Expr>();
        e->negated = negated;
        e->args.push_back(lhs);
        expect_symbol("(");
        if (peek_kw("SELECT")) {
          e->kind = Expr::Kind::InSelect;
          e->subquery = std::make_shared<const Select>(select());
        } else {
          e->kind = Expr::Kind::InList;
          do {
            e->args.push_back(expr());
          } while (accept_symbol(","));
        }
        expect_symbol(")");
        lhs = e;
        continue;
      }
      return lhs;
    }
  }

  ExprPtr additive() {
    auto lhs = multiplicative();
    for (;;) {
      if (accept_symbol("+")) {
        lhs = make_binary(BinOp::Add, lhs, multiplicative());
      } else if (accept_symbol("-")) {
        lhs = make_binary(BinOp::Sub, lhs, multiplicative());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr multiplicative() {
    auto lhs = unary();
    while (accept_symbol("*")) lhs = make_binary(BinOp::Mul, lhs, unary());
    return lhs;
  }

  ExprPtr unary() {
    if (accept_symbol("-")) {
      if (peek().kind == Tok::Number) return make_literal(to_int(next().text, true));
      return make_unary(UnOp::Neg, unary());
    }
    accept_symbol("+");
    return primary();
  }

  ExprPtr primary() {
    const auto& t = peek();
    if (t.kind == Tok::Number) return make_literal(to_int(next().text, false));
    if (t.kind == Tok::String) return make_literal(Value(next().text));
    if (accept_symbol("(")) {
      auto e = expr();
      expect_symbol(")");
      return e;
    }
    if (accept_kw("NULL")) return make_literal(Value::null());
    if (accept_kw("TRUE")) return make_literal(Value(true));
    if (accept_kw("FALSE")) return make_literal(Value(false));
    if (t.kind == Tok::Ident && peek(1).kind == Tok::Symbol && peek(1).text == "(" &&
        !is_reserved(t.text)) {
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Call;
      e->name = text::to_upper(next().text);
      next();
      if (!accept_symbol(")")) {
        do {
          e->args.push_back(expr());
        } while (accept_symbol(","));
        expect_symbol(")");
      }
      return e;
    }
    auto first = identifier();
    if (accept_symbol(".")) return make_column(first, identifier());
    return make_column("", first);
  }
};

}  // namespace

ExprPtr make_literal(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Literal;
  e->literal = std::move(v);
  return e;
}

ExprPtr make_column(std::string qualifier, std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Column;
  e->qualifier = std::move(qualifier);
  e->name = std::move(name);
  return e;
}

ExprPtr make_binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Binary;
  e->binop = op;
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr make_unary(UnOp op, ExprPtr operand) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Unary;
  e->unop = op;
  e->args = {std::move(operand)};
  return e;
}

Statement parse_statement(std::string_view text) { return Parser(text).statement(); }

ExprPtr parse_expression(std::string_view text) { return Parser(text).expression_only(); }

}  // namespace txpat::sql
