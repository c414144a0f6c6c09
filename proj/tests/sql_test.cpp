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

#include "txpat/schema.hpp"
#include "txpat/sql.hpp"
#include "txpat/sql_gen.hpp"

using namespace txpat;

namespace {

std::string norm(const std::string& text) { return sql::render(sql::parse_statement(text)); }

const char* kStatements[] = {
    "SELECT * FROM t",
    "SELECT c0, t.ID AS k FROM t WHERE (c0 >= 0) AND NOT (c1 IS NULL) ORDER BY c0 DESC LIMIT 3",
    "SELECT * FROM t0 INNER JOIN t1 ON t0.c1 = t1.c1 WHERE t0.ID = 2",
    "SELECT * FROM t0 LEFT JOIN t1 ON t0.ID = t1.c0 RIGHT JOIN t2 ON t2.ID = t1.ID",
    "SELECT * FROM t0 CROSS JOIN t1",
    "SELECT c1 FROM (SELECT * FROM t2 ORDER BY c0 LIMIT 2) AS t",
    "UPDATE t1 SET c0 = 10 WHERE c0 IN (SELECT c1 FROM (SELECT * FROM t2 ORDER BY c0 LIMIT 2) AS t)",
    "UPDATE t SET c0 = c0 + 1, c2 = 'it''s' WHERE ID = 1",
    "DELETE FROM t WHERE c0 NOT IN (1, 2, 3)",
    "INSERT INTO t (c0, c1) VALUES (1, 'a'), (2, NULL)",
    "INSERT INTO t VALUES (1, TRUE, -5)",
    "CREATE TABLE t (c0 INT PRIMARY KEY AUTO_INCREMENT, c1 TEXT UNIQUE, c2 BOOLEAN NOT NULL, "
    "c3 INT REFERENCES p(ID))",
    "CREATE TRIGGER tr AFTER UPDATE ON t FOR EACH ROW BEGIN INSERT INTO t_log (a, b) VALUES (NEW.ID, "
    "CONNECTION_ID()); END",
    "BEGIN",
    "START TRANSACTION",
    "START TRANSACTION WITH CONSISTENT SNAPSHOT",
    "COMMIT",
    "ROLLBACK",
    "SET SESSION TRANSACTION ISOLATION LEVEL READ COMMITTED",
};

}  // namespace

TEST(Sql, RenderIsAFixpoint) {
  for (const char* s : kStatements) {
    auto once = norm(s);
    EXPECT_EQ(norm(once), once) << s;
  }
}

TEST(Sql, CaseInsensitiveKeywords) {
  EXPECT_EQ(norm("select * from t where c0 = 1"), norm("SELECT * FROM t WHERE c0 = 1"));
}

TEST(Sql, SetIsolationLevels) {
  auto st = sql::parse_statement("SET SESSION TRANSACTION ISOLATION LEVEL SERIALIZABLE");
  ASSERT_TRUE(std::holds_alternative<sql::SetIsolation>(st));
  EXPECT_EQ(std::get<sql::SetIsolation>(st).level, IsolationLevel::SER);
  st = sql::parse_statement("SET SESSION TRANSACTION ISOLATION LEVEL READ UNCOMMITTED");
  EXPECT_EQ(std::get<sql::SetIsolation>(st).level, IsolationLevel::RU);
}

TEST(Sql, BeginVariants) {
  auto st = sql::parse_statement("START TRANSACTION WITH CONSISTENT SNAPSHOT");
  EXPECT_EQ(std::get<sql::BeginStmt>(st).variant, sql::BeginVariant::ConsistentSnapshot);
}

TEST(Sql, SyntaxErrors) {
  for (const char* bad : {"SELEC * FROM t", "SELECT * FROM", "UPDATE t SET WHERE ID = 1", "INSERT INTO t VALUES (1",
                          "DELETE t", "SELECT * FROM t WHERE", "SELECT * FROM t LIMIT x"}) {
    EXPECT_THROW(sql::parse_statement(bad), sql::SqlSyntaxError) << bad;
  }
}

TEST(Sql, ReferencedTables) {
  auto tables = sql::referenced_tables(sql::parse_statement(
      "UPDATE t1 SET c0 = 10 WHERE c0 IN (SELECT c1 FROM (SELECT * FROM t2) AS t)"));
  ASSERT_FALSE(tables.empty());
  EXPECT_EQ(tables.front(), "t1");
  EXPECT_NE(std::find(tables.begin(), tables.end(), "t2"), tables.end());
}

TEST(Sql, GeneratedPoolsRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    Schema s = gen_schema(seed);
    gen_seed_data(s, 5, seed);
    for (const auto& st : gen_statement_pool(s, seed, 30)) {
      auto text = st.text();
      EXPECT_EQ(norm(text), text) << text;
    }
  }
}

TEST(Sql, ValueLiterals) {
  EXPECT_EQ(Value(std::string("it's")).to_sql(), "'it''s'");
  EXPECT_EQ(Value(true).to_sql(), "TRUE");
  EXPECT_EQ(Value::null().to_sql(), "NULL");
  EXPECT_EQ(Value(42).to_display(), "42");
  EXPECT_FALSE(sql_compare(Value::null(), Value(1)).has_value());
  EXPECT_LT(Value::null(), Value(0));
  EXPECT_LT(Value(5), Value("a"));
}
