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

#pragma once

// Brute-force references used by the property and acceptance tests.

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "txpat/detector.hpp"
#include "txpat/rng.hpp"

namespace txpat::testing {

using EdgeKey = std::tuple<int, int, DepKind, std::string, std::int64_t, std::int64_t, std::int64_t>;

inline EdgeKey key_of(const DependencyEdge& e) {
  return {e.src, e.dst, e.kind, e.table, e.row_id, e.src_version, e.dst_version};
}

inline std::set<EdgeKey> graph_keys(const DependencyGraph& g) {
  std::set<EdgeKey> out;
  for (const auto& e : g.edges) out.insert(key_of(e));
  return out;
}

/// All-pairs edge derivation over a trace whose records are already in
/// effect order, each session running one transaction.
inline std::set<EdgeKey> oracle_edges(const ExecutionTrace& t) {
  struct Touch {
    std::size_t pos;
    int txn;
    TouchedRow row;
  };
  std::vector<Touch> all;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    const auto& r = t.records[i];
    if (!r.status.ok()) continue;
    for (const auto& w : r.touched) all.push_back({i, r.txn, w});
  }
  auto installs = [](const Touch& x) { return x.row.kind != TouchKind::Read; };
  // latest install of (table,row,version) strictly before position `pos`
  auto latest_install = [&](const std::string& table, std::int64_t row, std::int64_t v,
                            std::size_t pos) -> const Touch* {
    const Touch* best = nullptr;
    for (const auto& x : all)
      if (installs(x) && x.pos < pos && x.row.table == table && x.row.row_id == row && x.row.version == v)
        best = &x;
    return best;
  };
  std::set<EdgeKey> out;
  for (const auto& b : all) {
    const auto& r = b.row;
    if (installs(b)) {
      if (const auto* a = latest_install(r.table, r.row_id, r.version - 1, b.pos); a && a->txn != b.txn)
        out.insert({a->txn, b.txn, DepKind::WW, r.table, r.row_id, r.version - 1, r.version});
    } else {
      if (const auto* a = latest_install(r.table, r.row_id, r.version, b.pos); a && a->txn != b.txn)
        out.insert({a->txn, b.txn, DepKind::WR, r.table, r.row_id, r.version, r.version});
      for (const auto& c : all)
        if (installs(c) && c.txn != b.txn && c.row.table == r.table && c.row.row_id == r.row_id &&
            c.row.version == r.version + 1)
          out.insert({b.txn, c.txn, DepKind::RW, r.table, r.row_id, r.version, r.version + 1});
    }
  }
  return out;
}

/// Random committed multi-transaction trace over `rows` rows with versions
/// consistent per row: every write installs the row's next version, every
/// read observes some already installed version.
inline ExecutionTrace random_trace(std::uint64_t seed, int txns, int data_ops, int rows = 2) {
  Rng rng(seed);
  ExecutionTrace t;
  t.isolation = IsolationLevel::RC;
  t.backend = "random";
  t.outcomes.assign(static_cast<std::size_t>(txns), TxnOutcome::Committed);
  std::vector<std::int64_t> cur(static_cast<std::size_t>(rows), 0);
  std::int64_t ts = 1000;
  auto push = [&](int txn, RecordKind k, std::vector<TouchedRow> touched) {
    OpRecord r;
    r.global_seq = static_cast<std::int64_t>(t.records.size());
    r.txn = txn;
    r.op_kind = k;
    r.stmt_text = std::string(to_string(k));
    r.touched = std::move(touched);
    r.timestamp = ts++;
    t.records.push_back(std::move(r));
  };
  for (int x = 1; x <= txns; ++x) push(x, RecordKind::Begin, {});
  for (int i = 0; i < data_ops; ++i) {
    const int txn = static_cast<int>(rng.uniform(1, txns));
    const auto row = static_cast<std::size_t>(rng.index(static_cast<std::size_t>(rows)));
    if (rng.chance(0.5)) {
      push(txn, RecordKind::Write, {{"t", static_cast<std::int64_t>(row) + 1, ++cur[row], TouchKind::Update}});
    } else {
      push(txn, RecordKind::Read, {{"t", static_cast<std::int64_t>(row) + 1, rng.uniform(0, cur[row]), TouchKind::Read}});
    }
  }
  for (int x = 1; x <= txns; ++x) push(x, RecordKind::Commit, {});
  return t;
}

/// Direct rendering of a pattern as a trace: every transaction takes its
/// snapshot up front, variable k maps to row k+1 of table "t", versions are
/// taken as is.
inline ExecutionTrace pattern_instance(const AnomalyPattern& p, IsolationLevel level) {
  ExecutionTrace t;
  t.pattern_id = p.id;
  t.isolation = level;
  t.backend = "instance";
  const int n = p.txn_count();
  t.outcomes.assign(static_cast<std::size_t>(n), TxnOutcome::Undetermined);
  const auto vars = p.variables();
  auto row_of = [&](const std::string& v) {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == v) return static_cast<std::int64_t>(i) + 1;
    return std::int64_t{0};
  };
  std::int64_t ts = 5000;
  auto push = [&](int txn, RecordKind k, std::vector<TouchedRow> touched) {
    OpRecord r;
    r.global_seq = static_cast<std::int64_t>(t.records.size());
    r.txn = txn;
    r.op_kind = k;
    r.stmt_text = std::string(to_string(k));
    r.touched = std::move(touched);
    r.timestamp = ts++;
    t.records.push_back(std::move(r));
  };
  for (int x = 1; x <= n; ++x) {
    push(x, RecordKind::Begin, {});
    t.records.back().stmt_text = "START TRANSACTION WITH CONSISTENT SNAPSHOT";
  }
  for (const auto& op : p.ops) {
    switch (op.kind) {
      case OpKind::Read: push(op.txn, RecordKind::Read, {{"t", row_of(op.var), op.version, TouchKind::Read}}); break;
      case OpKind::Write:
        push(op.txn, RecordKind::Write, {{"t", row_of(op.var), op.version, TouchKind::Update}});
        break;
      case OpKind::Commit:
        push(op.txn, RecordKind::Commit, {});
        t.outcomes[static_cast<std::size_t>(op.txn) - 1] = TxnOutcome::Committed;
        break;
      case OpKind::Abort:
        push(op.txn, RecordKind::Rollback, {});
        t.outcomes[static_cast<std::size_t>(op.txn) - 1] = TxnOutcome::Aborted;
        break;
    }
  }
  return t;
}

}  // namespace txpat::testing
