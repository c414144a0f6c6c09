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

#include <nlohmann/json.hpp>

#include "txpat/detector.hpp"

using namespace txpat;

namespace {

struct TraceBuilder {
  ExecutionTrace t;
  std::int64_t ts = 100;

  explicit TraceBuilder(IsolationLevel l = IsolationLevel::RR, int txns = 2) {
    t.isolation = l;
    t.backend = "test";
    t.outcomes.assign(static_cast<std::size_t>(txns), TxnOutcome::Undetermined);
  }
  TraceBuilder& add(int txn, RecordKind k, std::vector<TouchedRow> touched = {}, std::optional<DbError> err = {}) {
    OpRecord r;
    r.global_seq = static_cast<std::int64_t>(t.records.size());
    r.txn = txn;
    r.op_kind = k;
    r.stmt_text = std::string(to_string(k));
    r.touched = std::move(touched);
    r.timestamp = ts++;
    r.status.error = std::move(err);
    if (k == RecordKind::Commit) t.outcomes[static_cast<std::size_t>(txn) - 1] = TxnOutcome::Committed;
    if (k == RecordKind::Rollback) t.outcomes[static_cast<std::size_t>(txn) - 1] = TxnOutcome::Aborted;
    t.records.push_back(std::move(r));
    return *this;
  }
  TraceBuilder& begin(int txn) { return add(txn, RecordKind::Begin); }
  TraceBuilder& read(int txn, std::int64_t row, std::int64_t v) {
    return add(txn, RecordKind::Read, {{"t", row, v, TouchKind::Read}});
  }
  TraceBuilder& write(int txn, std::int64_t row, std::int64_t v) {
    return add(txn, RecordKind::Write, {{"t", row, v, TouchKind::Update}});
  }
  TraceBuilder& commit(int txn) { return add(txn, RecordKind::Commit); }
  TraceBuilder& rollback(int txn) { return add(txn, RecordKind::Rollback); }
};

// The lost update: T1 reads x, T2 overwrites and commits, T1 overwrites and commits.
ExecutionTrace lost_update_trace() {
  return TraceBuilder()
      .begin(1)
      .begin(2)
      .read(1, 1, 0)
      .write(2, 1, 1)
      .commit(2)
      .write(1, 1, 2)
      .commit(1)
      .t;
}

AnomalyPattern pattern(const std::string& id) {
  const auto* p = find_pattern(builtin_catalog(), id);
  EXPECT_NE(p, nullptr) << id;
  return *p;
}

}  // namespace

TEST(Detector, LostUpdateSignature) {
  auto sig = derive_signature(pattern("lost-update"));
  std::vector<SignatureEdge> want{{1, 2, DepKind::RW, "x", 0, 1}, {2, 1, DepKind::WW, "x", 1, 2}};
  std::sort(want.begin(), want.end());
  EXPECT_EQ(sig.edges, want);
  EXPECT_EQ(sig.ops.size(), 5u);
}

TEST(Detector, DirtyWriteSignature) {
  auto p = pattern("dirty-write");
  auto sig = derive_signature(p);
  ASSERT_FALSE(sig.edges.empty());
  for (const auto& e : sig.edges) {
    EXPECT_EQ(e.kind, DepKind::WW);
    EXPECT_EQ(e.dst_version, e.src_version + 1);
  }
}

TEST(Detector, LostUpdateGraphEdges) {
  auto g = build_graph(lost_update_trace());
  EXPECT_EQ(g.nodes.size(), 2u);
  EXPECT_TRUE(g.has_edge(1, 2, DepKind::RW, "t", 1, 0, 1));
  EXPECT_TRUE(g.has_edge(2, 1, DepKind::WW, "t", 1, 1, 2));
  EXPECT_FALSE(g.has_edge(1, 2, DepKind::WR, "t", 1, 0, 1));
  EXPECT_EQ(g.nodes.at(1).outcome, TxnOutcome::Committed);
}

TEST(Detector, SingleTransactionHasNoEdges) {
  auto t = TraceBuilder(IsolationLevel::RR, 1).begin(1).read(1, 1, 0).write(1, 1, 1).read(1, 1, 1).commit(1).t;
  auto g = build_graph(t);
  EXPECT_TRUE(g.edges.empty());
  EXPECT_TRUE(detect(t, IsolationLevel::RR, builtin_catalog()).empty());
}

TEST(Detector, DirtyReadFromAbortedWriter) {
  auto t = TraceBuilder(IsolationLevel::RC)
               .begin(1)
               .begin(2)
               .write(1, 1, 1)
               .read(2, 1, 1)
               .rollback(1)
               .commit(2)
               .t;
  auto g = build_graph(t);
  EXPECT_TRUE(g.has_edge(1, 2, DepKind::WR, "t", 1, 1, 1));
  EXPECT_EQ(g.nodes.at(1).outcome, TxnOutcome::Aborted);
  auto reports = detect(t, IsolationLevel::RC, builtin_catalog());
  bool dirty = false;
  for (const auto& r : reports) dirty |= r.pattern_id == "dirty-read";
  EXPECT_TRUE(dirty);
}

TEST(Detector, LostUpdateMatchedOnlyWhereDisallowed) {
  auto t = lost_update_trace();
  auto rr = detect(t, IsolationLevel::RR, builtin_catalog());
  ASSERT_FALSE(rr.empty());
  bool found = false;
  for (const auto& r : rr) {
    if (r.pattern_id != "lost-update") continue;
    found = true;
    EXPECT_EQ(r.phase, Phase::Implicit);
    EXPECT_EQ(r.failure_class, "anomaly");
    EXPECT_EQ(r.txn_binding, (std::map<int, int>{{1, 1}, {2, 2}}));
    ASSERT_EQ(r.bindings.size(), 1u);
    EXPECT_EQ(r.bindings[0], (VarRow{"x", "t", 1}));
  }
  EXPECT_TRUE(found);
  t.isolation = IsolationLevel::RC;
  for (const auto& r : detect(t, IsolationLevel::RC, builtin_catalog())) EXPECT_NE(r.pattern_id, "lost-update");
}

TEST(Detector, SerialExecutionIsClean) {
  auto t = TraceBuilder()
               .begin(1)
               .read(1, 1, 0)
               .write(1, 1, 1)
               .commit(1)
               .begin(2)
               .read(2, 1, 1)
               .write(2, 1, 2)
               .commit(2)
               .t;
  EXPECT_TRUE(detect(t, IsolationLevel::SER, builtin_catalog()).empty());
}

TEST(Detector, CrashIsExplicit) {
  auto b = TraceBuilder().begin(1).begin(2).read(1, 1, 0);
  b.add(2, RecordKind::Write, {}, DbError{ErrorClass::Crash, "Lost connection to server during query"});
  b.t.terminal = DbError{ErrorClass::Crash, "Lost connection to server during query"};
  auto d = analyze(b.t, IsolationLevel::RR, builtin_catalog());
  EXPECT_EQ(d.verdict, Verdict::Explicit);
  ASSERT_EQ(d.reports.size(), 1u);
  EXPECT_EQ(d.reports[0].phase, Phase::Explicit);
  EXPECT_EQ(d.reports[0].failure_class, "Crash");
  EXPECT_TRUE(d.reports[0].pattern_id.empty());
}

TEST(Detector, DeadlockIsDiscarded) {
  auto b = TraceBuilder().begin(1).begin(2).write(1, 1, 1).write(2, 2, 1);
  b.add(1, RecordKind::Write, {}, DbError{ErrorClass::Deadlock, "Deadlock found"});
  b.t.terminal = DbError{ErrorClass::Deadlock, "Deadlock found"};
  auto d = analyze(b.t, IsolationLevel::RR, builtin_catalog());
  EXPECT_EQ(d.verdict, Verdict::Discarded);
  EXPECT_EQ(d.discard_class, ErrorClass::Deadlock);
  EXPECT_TRUE(d.reports.empty());
}

TEST(Detector, VersionGapIsCorrupt) {
  auto t = TraceBuilder().begin(1).begin(2).write(1, 1, 1).commit(1).write(2, 1, 3).commit(2).t;
  EXPECT_THROW(build_graph(t), TraceCorrupt);
  EXPECT_EQ(analyze(t, IsolationLevel::RR, builtin_catalog()).verdict, Verdict::Corrupt);
}

TEST(Detector, EffectiveRecordsKeepLastTransaction) {
  auto t = TraceBuilder(IsolationLevel::RR, 1)
               .begin(1)
               .write(1, 1, 1)
               .rollback(1)
               .begin(1)
               .read(1, 1, 0)
               .commit(1)
               .t;
  auto eff = effective_records(t);
  ASSERT_EQ(eff.size(), 3u);
  EXPECT_EQ(eff[0]->global_seq, 3);
}

TEST(Detector, DedupKeepsFirstPerKey) {
  BugReport a;
  a.pattern_id = "lost-update";
  a.backend = "engine";
  a.failure_class = "anomaly";
  a.txn_binding = {{1, 1}, {2, 2}};
  BugReport b = a;
  b.txn_binding = {{1, 2}, {2, 1}};
  BugReport c = a;
  c.level = IsolationLevel::SER;
  BugReport d = a;
  d.phase = Phase::Explicit;
  d.pattern_id.clear();
  d.failure_class = "Crash";
  BugReport e = d;
  e.failure_class = "AssertionFailure";
  auto out = dedup({a, b, c, d, e, d});
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0], a);
  EXPECT_EQ(out[1], c);
  EXPECT_EQ(out[2], d);
  EXPECT_EQ(out[3], e);
}

TEST(Detector, ReportJsonRoundTrip) {
  auto reports = detect(lost_update_trace(), IsolationLevel::RR, builtin_catalog());
  ASSERT_FALSE(reports.empty());
  for (const auto& r : reports) {
    nlohmann::json j = r;
    EXPECT_EQ(j.get<BugReport>(), r);
  }
}
