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

// Two-phase detection over an execution trace: explicit failures first, then
// dependency-graph construction and pattern matching.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "txpat/pattern.hpp"
#include "txpat/trace.hpp"

namespace txpat {

enum class DepKind : std::uint8_t { WW, WR, RW };

std::string_view to_string(DepKind k);

struct DependencyEdge {
  int src = 0;
  int dst = 0;
  DepKind kind = DepKind::WW;
  std::string table;
  std::int64_t row_id = 0;
  std::int64_t src_version = 0;
  std::int64_t dst_version = 0;
  std::int64_t src_ts = 0;
  std::int64_t dst_ts = 0;

  friend auto operator<=>(const DependencyEdge&, const DependencyEdge&) = default;
};

struct TxnNode {
  int txn = 0;
  std::int64_t begin_ts = 0;
  std::int64_t end_ts = 0;
  TxnOutcome outcome = TxnOutcome::Undetermined;
};

struct DependencyGraph {
  std::map<int, TxnNode> nodes;
  std::vector<DependencyEdge> edges;  // sorted, unique

  bool has_edge(int src, int dst, DepKind kind, const std::string& table, std::int64_t row,
                std::int64_t src_version, std::int64_t dst_version) const;
};

class TraceCorrupt : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Records that count for analysis: each session's last transaction, i.e.
/// from its last BEGIN onwards, in effect order (timestamp, global_seq).
std::vector<const OpRecord*> effective_records(const ExecutionTrace& trace);

DependencyGraph build_graph(const ExecutionTrace& trace);

struct SignatureEdge {
  int src = 0;
  int dst = 0;
  DepKind kind = DepKind::WW;
  std::string var;
  int src_version = 0;
  int dst_version = 0;

  friend auto operator<=>(const SignatureEdge&, const SignatureEdge&) = default;
};

struct PatternSignature {
  std::string pattern_id;
  std::vector<SignatureEdge> edges;  // sorted, unique
  std::vector<PatternOp> ops;        // temporal template
};

PatternSignature derive_signature(const AnomalyPattern& p);

struct RowRef {
  std::string table;
  std::int64_t row_id = 0;

  friend auto operator<=>(const RowRef&, const RowRef&) = default;
};

struct Match {
  std::map<int, int> txns;           // pattern txn -> trace txn
  std::map<std::string, RowRef> vars;
  std::vector<std::int64_t> records;  // global_seq per pattern op
};

std::optional<Match> match(const DependencyGraph& graph, const ExecutionTrace& trace, const PatternSignature& sig);

enum class Phase : std::uint8_t { Explicit, Implicit };

std::string_view to_string(Phase p);

struct VarRow {
  std::string var;
  std::string table;
  std::int64_t row_id = 0;

  friend bool operator==(const VarRow&, const VarRow&) = default;
};

struct BugReport {
  std::string pattern_id;  // empty for explicit reports
  IsolationLevel level = IsolationLevel::RR;
  std::vector<VarRow> bindings;
  std::map<int, int> txn_binding;
  std::vector<std::int64_t> records;
  std::string reproducer;
  Phase phase = Phase::Implicit;
  std::string backend;
  std::string failure_class;  // error class for explicit, "anomaly" for implicit
  std::string message;

  friend bool operator==(const BugReport&, const BugReport&) = default;
};

void to_json(nlohmann::json& j, const BugReport& r);
void from_json(const nlohmann::json& j, BugReport& r);

enum class Verdict : std::uint8_t { Eligible, Explicit, Discarded, Corrupt };

struct Detection {
  Verdict verdict = Verdict::Eligible;
  std::optional<ErrorClass> discard_class;
  std::vector<BugReport> reports;
};

/// Full two-phase detection with the verdict of phase 1.
Detection analyze(const ExecutionTrace& trace, IsolationLevel level, std::span<const AnomalyPattern> catalog);

/// Reports only; one per (pattern, txn binding).
std::vector<BugReport> detect(const ExecutionTrace& trace, IsolationLevel level,
                              std::span<const AnomalyPattern> catalog);

/// Keeps the first report per (phase, pattern, level, backend, failure class).
std::vector<BugReport> dedup(const std::vector<BugReport>& reports);

}  // namespace txpat
