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

#include <algorithm>

#include "txpat/engine.hpp"
#include "txpat/executor.hpp"

using namespace txpat;

namespace {

const std::string kScenarios = std::string(TXPAT_SOURCE_DIR) + "/scenarios/";

std::vector<TouchedRow> writes_of(const OpRecord& r) {
  std::vector<TouchedRow> w;
  for (const auto& t : r.touched)
    if (t.kind != TouchKind::Read) w.push_back(t);
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

TEST(Executor, LostUpdateScenarioTrace) {
  auto c = load_reproducer(kScenarios + "lost_update_rr.sql");
  engine::EngineAdapter a;
  auto t = run_case(c, a);
  EXPECT_FALSE(t.terminal.has_value());
  EXPECT_FALSE(t.timed_out);
  ASSERT_EQ(t.records.size(), c.steps.size());
  EXPECT_EQ(t.isolation, IsolationLevel::RR);
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    EXPECT_EQ(t.records[i].global_seq, static_cast<std::int64_t>(i));
    EXPECT_EQ(t.records[i].stmt_text, c.steps[i].sql);
    if (i) EXPECT_GT(t.records[i].timestamp, t.records[i - 1].timestamp);
  }
  EXPECT_EQ(t.outcome(2), TxnOutcome::Committed);
  EXPECT_EQ(t.outcome(1), TxnOutcome::Aborted);
  const auto& read = t.records[4];
  ASSERT_EQ(read.touched.size(), 1u);
  EXPECT_EQ(read.touched[0], (TouchedRow{"t", 1, 0, TouchKind::Read}));
  EXPECT_EQ(writes_of(t.records[5]), (std::vector<TouchedRow>{{"t", 1, 1, TouchKind::Update}}));
}

TEST(Executor, BlockedStatementCompletesAfterRelease) {
  auto c = parse_reproducer(
      "/*init*/ CREATE TABLE t (ID INT PRIMARY KEY, VERS INT, c0 INT);\n"
      "/*init*/ INSERT INTO t VALUES (1, 0, 1);\n"
      "/*txn 1*/ BEGIN;\n"
      "/*txn 2*/ BEGIN;\n"
      "/*txn 1*/ UPDATE t SET c0 = 2 WHERE ID = 1;\n"
      "/*txn 2*/ UPDATE t SET c0 = 3 WHERE ID = 1;\n"
      "/*txn 1*/ COMMIT;\n"
      "/*txn 2*/ COMMIT;\n");
  engine::EngineAdapter a;
  auto t = run_case(c, a, ExecutorConfig{std::chrono::milliseconds(5), std::chrono::milliseconds(5000)});
  ASSERT_EQ(t.records.size(), 6u);
  EXPECT_FALSE(t.timed_out);
  auto it = std::find_if(t.records.begin(), t.records.end(),
                         [](const OpRecord& r) { return r.stmt_text.find("c0 = 3") != std::string::npos; });
  ASSERT_NE(it, t.records.end());
  EXPECT_TRUE(it->status.blocked);
  EXPECT_TRUE(it->status.ok());
  EXPECT_EQ(writes_of(*it), (std::vector<TouchedRow>{{"t", 1, 2, TouchKind::Update}}));
  EXPECT_EQ(t.outcome(1), TxnOutcome::Committed);
  EXPECT_EQ(t.outcome(2), TxnOutcome::Committed);
}

TEST(Executor, InitFailureEndsRun) {
  auto c = parse_reproducer(
      "/*init*/ CREATE TABLE t (ID INT PRIMARY KEY);\n"
      "/*init*/ INSERT INTO nope VALUES (1);\n"
      "/*txn 1*/ SELECT * FROM t;\n");
  engine::EngineAdapter a;
  auto t = run_case(c, a);
  ASSERT_TRUE(t.terminal.has_value());
  EXPECT_EQ(t.terminal->cls, ErrorClass::SemanticError);
}

TEST(Executor, RecordingDdlCoversTablesWithIds) {
  auto s = schema_from_ddl({"CREATE TABLE t0 (ID INT PRIMARY KEY, VERS INT, c0 INT)",
                            "CREATE TABLE t1 (c0 INT, c1 TEXT)"});
  auto ddl = recording_ddl(s);
  ASSERT_EQ(ddl.size(), 4u);
  EXPECT_NE(ddl[0].find(log_table_name("t0")), std::string::npos);
  for (const char* ev : {"INSERT", "UPDATE", "DELETE"}) {
    EXPECT_EQ(std::count_if(ddl.begin(), ddl.end(),
                            [&](const std::string& d) { return d.find("AFTER " + std::string(ev)) != std::string::npos; }),
              1)
        << ev;
  }
  for (const auto& d : ddl) EXPECT_EQ(d.find("t1"), std::string::npos);

  engine::EngineAdapter native;
  EXPECT_THROW(install_recording(native, native.open_session(), s), TriggerUnsupported);
}

TEST(Executor, AugmentReadAddsProbes) {
  auto s = schema_from_ddl({"CREATE TABLE t0 (ID INT PRIMARY KEY, VERS INT, c0 INT)",
                            "CREATE TABLE t1 (ID INT PRIMARY KEY, c0 INT)"});
  auto a = augment_read("SELECT c0 FROM t0 WHERE c0 > 1", s);
  ASSERT_EQ(a.probes.size(), 1u);
  EXPECT_EQ(a.probes[0].table, "t0");
  EXPECT_FALSE(a.probes[0].vers_alias.empty());
  EXPECT_NE(a.sql.find(a.probes[0].id_alias), std::string::npos);

  auto j = augment_read("SELECT t0.c0 FROM t0 JOIN t1 ON t0.ID = t1.ID", s);
  ASSERT_EQ(j.probes.size(), 2u);
  EXPECT_TRUE(j.probes[1].vers_alias.empty());

  const std::string upd = "UPDATE t0 SET c0 = 1";
  EXPECT_EQ(augment_read(upd, s).sql, upd);
  EXPECT_TRUE(augment_read(upd, s).probes.empty());
}

TEST(Executor, AugmentedReadRunsOnEngine) {
  engine::Engine e;
  int s = e.open_session();
  ASSERT_TRUE(e.execute(s, "CREATE TABLE t0 (ID INT PRIMARY KEY, VERS INT, c0 INT)").ok());
  ASSERT_TRUE(e.execute(s, "INSERT INTO t0 VALUES (1, 0, 5), (2, 0, 6)").ok());
  auto schema = schema_from_ddl({"CREATE TABLE t0 (ID INT PRIMARY KEY, VERS INT, c0 INT)"});
  auto a = augment_read("SELECT c0 FROM t0 WHERE c0 = 6", schema);
  auto r = e.execute(s, a.sql);
  ASSERT_TRUE(r.ok()) << r.error->message;
  ASSERT_EQ(r.result.rows.size(), 1u);
  int idx = r.result.column_index(a.probes[0].id_alias);
  ASSERT_GE(idx, 0);
  EXPECT_EQ(r.result.rows[0][static_cast<std::size_t>(idx)], Value(2));
}

// Trigger logs and read probes must attribute the same rows and versions as the
// engine reports natively, as long as no transaction aborts.
TEST(ExecutorProperty, TriggerProvenanceMatchesNative) {
  const auto& catalog = builtin_catalog();
  int compared = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto& p = catalog[seed % catalog.size()];
    for (auto level : {IsolationLevel::RC, IsolationLevel::RR}) {
      TransactionCase c;
      try {
        c = generate_case(p, level, seed);
      } catch (const std::exception&) {
        continue;
      }
      engine::EngineAdapter native(engine::FaultSet{}, engine::EngineAdapter::Mode::Native);
      engine::EngineAdapter trig(engine::FaultSet{}, engine::EngineAdapter::Mode::Trigger);
      auto tn = run_case(c, native);
      auto tt = run_case(c, trig);
      bool aborted = tn.terminal.has_value();
      for (auto o : tn.outcomes) aborted |= o == TxnOutcome::Aborted;
      if (aborted || tt.degraded) continue;
      ASSERT_EQ(tn.records.size(), tt.records.size()) << p.id << " seed " << seed;
      for (std::size_t i = 0; i < tn.records.size(); ++i) {
        auto a = tn.records[i].touched, b = tt.records[i].touched;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b) << p.id << " seed " << seed << ": " << tn.records[i].stmt_text;
      }
      ++compared;
    }
  }
  EXPECT_GE(compared, 20);
}
