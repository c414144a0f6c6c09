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

#include <gtest/gtest.h>

#include <set>

#include "txpat/engine.hpp"
#include "txpat/rng.hpp"
#include "txpat/schema.hpp"
#include "txpat/sql_gen.hpp"
#include "txpat/txn_gen.hpp"

using namespace txpat;

namespace {

void load(engine::Engine& e, const Schema& s, const std::vector<std::string>& seed_sql) {
  int sid = e.open_session();
  for (const auto& d : emit_ddl(s)) EXPECT_TRUE(e.execute(sid, d).ok()) << d;
  for (const auto& d : seed_sql) EXPECT_TRUE(e.execute(sid, d).ok()) << d;
}

}  // namespace

TEST(Rng, DeterministicStreams) {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_EQ(derive_seed(9, 3), derive_seed(9, 3));
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    auto v = r.uniform(-3, 3);
    EXPECT_GE(v, -3);
    EXPECT_LE(v, 3);
  }
}

TEST(Schema, GeneratedSchemasRespectBounds) {
  SchemaConfig cfg;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Schema s = gen_schema(seed, cfg);
    EXPECT_GE(static_cast<int>(s.tables.size()), cfg.min_tables);
    EXPECT_LE(static_cast<int>(s.tables.size()), cfg.max_tables);
    for (std::size_t i = 0; i < s.tables.size(); ++i) {
      const auto& t = s.tables[i];
      EXPECT_GE(t.column_index(kIdColumn), 0);
      EXPECT_GE(t.column_index(kVersColumn), 0);
      for (const auto& c : t.columns) {
        if (!c.fk) continue;
        // FKs only point to earlier tables.
        auto* parent = s.table(c.fk->table);
        ASSERT_NE(parent, nullptr);
        EXPECT_LT(parent - s.tables.data(), static_cast<std::ptrdiff_t>(i));
      }
    }
  }
  cfg.max_tables = 9;
  EXPECT_THROW(gen_schema(1, cfg), std::invalid_argument);
}

TEST(Schema, DdlRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Schema s = gen_schema(seed);
    Schema back = schema_from_ddl(emit_ddl(s));
    ASSERT_EQ(back.tables.size(), s.tables.size());
    for (std::size_t i = 0; i < s.tables.size(); ++i) {
      ASSERT_EQ(back.tables[i].columns.size(), s.tables[i].columns.size());
      for (std::size_t c = 0; c < s.tables[i].columns.size(); ++c) {
        const auto& a = s.tables[i].columns[c];
        const auto& b = back.tables[i].columns[c];
        EXPECT_EQ(a.name, b.name);
        EXPECT_EQ(a.type, b.type);
        EXPECT_EQ(a.primary_key, b.primary_key);
        EXPECT_EQ(a.unique, b.unique);
        EXPECT_EQ(a.fk.has_value(), b.fk.has_value());
      }
    }
  }
}

TEST(Schema, SeedDataLoadsIntoEngine) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Schema s = gen_schema(seed);
    auto data = gen_seed_data(s, 6, seed);
    EXPECT_EQ(render_seed_data(s), data);
    engine::Engine e;
    load(e, s, data);
    for (const auto& t : s.tables) {
      auto rows = e.committed_rows(t.name);
      ASSERT_EQ(rows.size(), t.rows.size()) << t.name;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        EXPECT_EQ(rows[r].row_id, static_cast<std::int64_t>(r) + 1);
        EXPECT_EQ(rows[r].values, t.rows[r]);
      }
    }
  }
}

TEST(SqlGen, PoolCoversEveryKindPerTable) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Schema s = gen_schema(seed);
    gen_seed_data(s, 5, seed);
    auto pool = gen_statement_pool(s, seed, 10);
    for (const auto& t : s.tables) {
      std::set<StmtKind> kinds;
      for (const auto& st : pool) {
        if (!st.tables.empty() && st.tables.front() == t.name) kinds.insert(st.kind);
      }
      for (auto k : {StmtKind::Select, StmtKind::Update, StmtKind::Insert, StmtKind::Delete}) {
        EXPECT_TRUE(kinds.count(k)) << t.name << " " << to_string(k);
      }
    }
  }
}

// A generated condition always selects its target row; write conditions select nothing else.
TEST(SqlGen, ConditionsSelectTheTargetRow) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    Schema s = gen_schema(seed);
    auto data = gen_seed_data(s, 6, seed);
    engine::Engine e;
    load(e, s, data);
    int sid = e.open_session();
    Rng rng(seed);
    for (const auto& t : s.tables) {
      for (bool for_write : {false, true}) {
        const std::int64_t target = rng.uniform(1, static_cast<std::int64_t>(t.rows.size()));
        ConditionOptions opts;
        opts.for_write = for_write;
        auto cond = gen_condition(s, t.name, target, rng, SqlGenConfig{}, opts);
        auto where = cond.to_expr(false);
        std::string q = "SELECT ID FROM " + t.name + (where ? " WHERE " + sql::render(*where) : "");
        auto r = e.execute(sid, q);
        ASSERT_TRUE(r.ok()) << q;
        std::set<std::int64_t> ids;
        for (const auto& row : r.result.rows) ids.insert(row[0].as_int());
        EXPECT_TRUE(ids.count(target)) << q;
        if (for_write) EXPECT_EQ(ids.size(), 1u) << q;
        EXPECT_TRUE(cond.matches(t, t.rows[static_cast<std::size_t>(target - 1)]));
      }
    }
  }
}

TEST(SqlGen, MissingRowRejected) {
  Schema s = gen_schema(3);
  gen_seed_data(s, 3, 3);
  EXPECT_THROW(gen_condition(s, s.tables[0].name, 99, 1), MissingRow);
}

TEST(TxnGen, CasesFollowTheirPatterns) {
  for (const auto& p : builtin_catalog()) {
    for (auto level : {IsolationLevel::RC, IsolationLevel::RR, IsolationLevel::SER}) {
      auto c = generate_case(p, level, derive_seed(17, static_cast<std::uint64_t>(&p - builtin_catalog().data())));
      EXPECT_EQ(c.pattern_id, p.id);
      EXPECT_EQ(c.isolation, level);
      EXPECT_EQ(c.txn_count(), p.txn_count());
      std::vector<int> sched;
      for (const auto& st : c.steps) {
        if (st.role == StepRole::Pattern) sched.push_back(st.txn);
      }
      EXPECT_EQ(sched, extract_schedule(p).seq) << p.id;
      for (const auto& st : c.steps) {
        if (st.role != StepRole::Pattern) continue;
        const auto& op = p.ops[static_cast<std::size_t>(st.pattern_op)];
        auto kind = record_kind_of(st.sql);
        switch (op.kind) {
          case OpKind::Read: EXPECT_EQ(kind, RecordKind::Read) << st.sql; break;
          case OpKind::Write: EXPECT_EQ(kind, RecordKind::Write) << st.sql; break;
          case OpKind::Commit: EXPECT_EQ(kind, RecordKind::Commit) << st.sql; break;
          case OpKind::Abort: EXPECT_EQ(kind, RecordKind::Rollback) << st.sql; break;
        }
      }
      EXPECT_EQ(c.binding.vars.size(), p.variables().size());
    }
  }
}

TEST(TxnGen, DeterministicInSeed) {
  const auto& p = *find_pattern(builtin_catalog(), "write-skew");
  EXPECT_EQ(format_reproducer(generate_case(p, IsolationLevel::SER, 77)),
            format_reproducer(generate_case(p, IsolationLevel::SER, 77)));
  EXPECT_NE(format_reproducer(generate_case(p, IsolationLevel::SER, 77)),
            format_reproducer(generate_case(p, IsolationLevel::SER, 78)));
}

TEST(TxnGen, ReproducerRoundTrip) {
  for (const auto& p : builtin_catalog()) {
    auto c = generate_case(p, IsolationLevel::RR, 5);
    auto text = format_reproducer(c);
    auto back = parse_reproducer(text);
    EXPECT_EQ(back.pattern_id, c.pattern_id);
    EXPECT_EQ(back.isolation, c.isolation);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.init_sql, c.init_sql);
    ASSERT_EQ(back.steps.size(), c.steps.size());
    for (std::size_t i = 0; i < c.steps.size(); ++i) {
      EXPECT_EQ(back.steps[i].txn, c.steps[i].txn);
      EXPECT_EQ(back.steps[i].sql, c.steps[i].sql);
    }
    auto again = format_reproducer(back);
    EXPECT_EQ(again.substr(again.find("/*init*/")), text.substr(text.find("/*init*/")));
  }
}

TEST(TxnGen, ReproducerErrors) {
  EXPECT_THROW(parse_reproducer(""), ReproducerParseError);
  try {
    parse_reproducer("/*init*/ CREATE TABLE t (c0 INT);\nhello\n");
    FAIL();
  } catch (const ReproducerParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(parse_reproducer("/*txn 0*/ BEGIN;\n"), ReproducerParseError);
  auto c = parse_reproducer("/*txn1*/ SET SESSION TRANSACTION ISOLATION LEVEL READ COMMITTED;\n/*txn1*/ BEGIN;\n");
  EXPECT_EQ(c.isolation, IsolationLevel::RC);
  EXPECT_EQ(c.steps.size(), 2u);
}

TEST(TxnGen, StatementSelectionHonoursTuple) {
  Schema s = gen_schema(4);
  gen_seed_data(s, 5, 4);
  auto pool = gen_statement_pool(s, 4, 40);
  StmtTypeConstraint c{1, 2, 1, 0, 1};
  auto sel = select_statements(pool, c, 9);
  ASSERT_EQ(sel.size(), 4u);
  EXPECT_TRUE(is_read_kind(sel[0].kind));
  EXPECT_TRUE(is_read_kind(sel[1].kind));
  EXPECT_EQ(sel[2].kind, StmtKind::Update);
  EXPECT_EQ(sel[3].kind, StmtKind::Commit);
  std::vector<Statement> empty;
  EXPECT_THROW(select_statements(empty, c, 9), PoolExhausted);
}
