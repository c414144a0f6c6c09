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

// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "support/oracle.hpp"
#include "txpat/campaign.hpp"
#include "txpat/constraints.hpp"

using namespace txpat;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

const std::string kScenarios = std::string(TXPAT_SOURCE_DIR) + "/scenarios/";

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string digest;  // deterministic output for the repeat check
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void fail(Outcome& o, const std::string& why) {
  o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += why;
}

// ---- pattern families ------------------------------------------------------

struct OpAt {
  std::size_t pos;
  const PatternOp* op;
};

std::size_t terminal_pos(const AnomalyPattern& p, int txn) {
  for (std::size_t i = 0; i < p.ops.size(); ++i)
    if (p.ops[i].txn == txn && p.ops[i].is_terminal()) return i;
  return p.ops.size();
}

// writer of (var, version) and its position, if the pattern installs it
std::optional<OpAt> writer_of(const AnomalyPattern& p, const std::string& var, int version) {
  for (std::size_t i = 0; i < p.ops.size(); ++i)
    if (p.ops[i].kind == OpKind::Write && p.ops[i].var == var && p.ops[i].version == version) return OpAt{i, &p.ops[i]};
  return std::nullopt;
}

bool reads_uncommitted(const AnomalyPattern& p) {
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    const auto& op = p.ops[i];
    if (op.kind != OpKind::Read) continue;
    auto w = writer_of(p, op.var, op.version);
    if (w && w->op->txn != op.txn && terminal_pos(p, w->op->txn) > i) return true;
  }
  return false;
}

bool overwrites_uncommitted(const AnomalyPattern& p) {
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    const auto& op = p.ops[i];
    if (op.kind != OpKind::Write) continue;
    auto w = writer_of(p, op.var, op.version - 1);
    if (w && w->op->txn != op.txn && terminal_pos(p, w->op->txn) > i) return true;
  }
  return false;
}

std::size_t first_op(const AnomalyPattern& p, int txn) {
  for (std::size_t i = 0; i < p.ops.size(); ++i)
    if (p.ops[i].txn == txn) return i;
  return p.ops.size();
}

// A transaction overwrites a version committed after it had started.
bool overwrites_concurrent_commit(const AnomalyPattern& p) {
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    const auto& op = p.ops[i];
    if (op.kind != OpKind::Write) continue;
    auto w = writer_of(p, op.var, op.version - 1);
    if (!w || w->op->txn == op.txn) continue;
    const auto c = terminal_pos(p, w->op->txn);
    if (c < i && p.ops[c].kind == OpKind::Commit && first_op(p, op.txn) < c) return true;
  }
  return false;
}

// A transaction reads a version another transaction committed earlier in the pattern.
bool reads_later_commit(const AnomalyPattern& p) {
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    const auto& op = p.ops[i];
    if (op.kind != OpKind::Read) continue;
    auto w = writer_of(p, op.var, op.version);
    if (!w || w->op->txn == op.txn) continue;
    const auto c = terminal_pos(p, w->op->txn);
    if (c < i && p.ops[c].kind == OpKind::Commit) return true;
  }
  return false;
}

bool serializable_only(const AnomalyPattern& p) { return p.disallowed == LevelSet{IsolationLevel::SER}; }

struct FaultCase {
  engine::Fault fault;
  IsolationLevel level;
  const char* family;
  std::function<bool(const AnomalyPattern&)> member;
};

std::vector<FaultCase> fault_cases() {
  using engine::Fault;
  return {{Fault::AllowDirtyRead, IsolationLevel::RC, "reads-uncommitted", reads_uncommitted},
          {Fault::AllowDirtyWrite, IsolationLevel::RC, "overwrites-uncommitted", overwrites_uncommitted},
          {Fault::AllowLostUpdate, IsolationLevel::RR, "overwrites-concurrent-commit", overwrites_concurrent_commit},
          {Fault::AllowNonRepeatableRead, IsolationLevel::RR, "reads-later-commit", reads_later_commit},
          {Fault::SnapshotSeesLaterCommits, IsolationLevel::RR, "reads-later-commit", reads_later_commit},
          {Fault::AllowWriteSkew, IsolationLevel::SER, "serializable-only", serializable_only},
          {Fault::SerializableAsSnapshot, IsolationLevel::SER, "serializable-only", serializable_only}};
}

std::string campaign_digest(const CampaignSummary& s, const CampaignConfig& cfg) {
  json j = summary_json(s, cfg);
  j["reports"] = s.unique;
  return j.dump();
}

// ---- criteria --------------------------------------------------------------

Outcome catalog_fidelity() {
  Outcome o;
  auto cat = load_builtin_catalog();
  if (cat.size() != 46) fail(o, "catalog has " + std::to_string(cat.size()) + " patterns");
  std::set<std::string> ids;
  for (const auto& p : cat) {
    try {
      validate_pattern(p);
    } catch (const std::exception& e) {
      fail(o, p.id + ": " + e.what());
    }
    if (!ids.insert(p.id).second) fail(o, "duplicate id " + p.id);
    if (p.disallowed.empty()) fail(o, p.id + " has no disallowed level");
  }
  auto check = [&](const char* id, LevelSet want) {
    const auto* p = find_pattern(cat, id);
    if (!p) return fail(o, std::string("missing ") + id);
    if (p->disallowed != want) fail(o, std::string(id) + " disallowed = " + format_level_set(p->disallowed));
  };
  check("lost-update", {IsolationLevel::RR, IsolationLevel::SER});
  check("ext-36", {IsolationLevel::SER});
  check("ext-5", parse_level_set("ALL"));
  if (o.pass) o.detail = "46 patterns valid, spot checks exact";
  return o;
}

Outcome constraint_extraction() {
  Outcome o;
  const auto* lu = find_pattern(builtin_catalog(), "lost-update");
  if (extract_schedule(*lu).seq != std::vector<int>{1, 2, 2, 1, 1}) fail(o, "lost-update schedule");
  if (extract_stmt_type(*lu).at(1) != StmtTypeConstraint{2, 0, 1, 0, 1}) fail(o, "lost-update txn 2 type tuple");
  int ok = 0;
  for (const auto& p : builtin_catalog()) {
    try {
      auto back = reconstruct(extract_constraints(p));
      if (back.ops == p.ops) ++ok;
      else fail(o, "reconstruction differs for " + p.id);
    } catch (const std::exception& e) {
      fail(o, p.id + ": " + e.what());
    }
  }
  if (o.pass) o.detail = "schedule and type tuple exact, " + std::to_string(ok) + "/46 reconstructed";
  return o;
}

constexpr std::int64_t kFaultBudget = 100;
constexpr std::uint64_t kFaultSeed = 11;
constexpr double kFaultLimitS = 60;

Outcome injected_faults() {
  Outcome o;
  std::ostringstream det;
  for (const auto& fc : fault_cases()) {
    CampaignConfig cfg;
    cfg.levels = {fc.level};
    cfg.faults = {fc.fault};
    cfg.cases = kFaultBudget;
    cfg.seed = kFaultSeed;
    const auto t0 = Clock::now();
    auto s = run_campaign(cfg);
    const double dt = seconds_since(t0);
    std::int64_t first = -1;
    std::string hit;
    for (std::size_t k = 0; k < s.unique.size(); ++k) {
      const auto& r = s.unique[k];
      if (r.phase != Phase::Implicit) continue;
      const auto* p = find_pattern(builtin_catalog(), r.pattern_id);
      if (p && fc.member(*p) && (first < 0 || s.unique_case[k] < first)) {
        first = s.unique_case[k];
        hit = r.pattern_id;
      }
    }
    det << (det.tellp() ? ", " : "") << engine::to_string(fc.fault) << "@" << to_string(fc.level) << "->";
    if (first < 0) {
      det << "none";
      fail(o, std::string(engine::to_string(fc.fault)) + " produced no " + fc.family + " report");
    } else {
      det << hit << " (case " << first << ")";
    }
    if (dt > kFaultLimitS) fail(o, std::string(engine::to_string(fc.fault)) + " took " + std::to_string(dt) + " s");
    o.digest += campaign_digest(s, cfg);
  }
  o.detail = det.str() + (o.pass ? "" : "; " + o.detail);
  return o;
}

constexpr std::int64_t kCleanCasesPerLevel = 1000;
constexpr std::uint64_t kCleanSeed = 2026;

Outcome zero_false_positives() {
  Outcome o;
  std::ostringstream det;
  for (auto level : {IsolationLevel::RC, IsolationLevel::RR, IsolationLevel::SER}) {
    CampaignConfig cfg;
    cfg.levels = {level};
    cfg.cases = kCleanCasesPerLevel;
    cfg.seed = kCleanSeed;
    auto s = run_campaign(cfg);
    det << (det.tellp() ? ", " : "") << to_string(level) << ": " << s.executed << " executed, " << s.eligible
        << " eligible, " << s.implicit_bugs << " implicit, " << s.explicit_bugs << " explicit";
    if (s.generated != kCleanCasesPerLevel) fail(o, std::string(to_string(level)) + " did not run the full budget");
    if (s.implicit_bugs || s.explicit_bugs || s.corrupt)
      fail(o, std::string(to_string(level)) + " reported bugs on the clean engine");
    o.digest += campaign_digest(s, cfg);
  }
  o.detail = det.str() + (o.pass ? "" : "; " + o.detail);
  return o;
}

constexpr double kReplayLimitS = 5;

Outcome case_study_replays() {
  Outcome o;
  struct Replay {
    const char* file;
    engine::Fault fault;
    const char* pattern;
  };
  const Replay replays[] = {{"lost_update_rr.sql", engine::Fault::AllowLostUpdate, "lost-update"},
                            {"dirty_read_rc.sql", engine::Fault::AllowDirtyRead, "dirty-read"},
                            {"stale_snapshot_rr.sql", engine::Fault::SnapshotSeesLaterCommits, "ext-2"},
                            {"insert_scan_ser.sql", engine::Fault::SerializableAsSnapshot, "ext-36"}};
  std::ostringstream det;
  for (const auto& r : replays) {
    const auto t0 = Clock::now();
    auto with = replay_file(kScenarios + r.file, parse_target("engine"), {r.fault}, builtin_catalog());
    auto without = replay_file(kScenarios + r.file, parse_target("engine"), {}, builtin_catalog());
    const double dt = seconds_since(t0);
    det << (det.tellp() ? ", " : "") << r.file << ": " << with.reports.size() << "/" << without.reports.size();
    if (with.reports.size() != 1 || with.reports[0].phase != Phase::Implicit ||
        with.reports[0].pattern_id != r.pattern) {
      std::string got;
      for (const auto& b : with.reports) got += " " + b.pattern_id;
      fail(o, std::string(r.file) + " expected exactly " + r.pattern + ", got" + (got.empty() ? " none" : got));
    }
    if (!without.reports.empty()) fail(o, std::string(r.file) + " reports on the clean engine");
    if (dt > kReplayLimitS) fail(o, std::string(r.file) + " took " + std::to_string(dt) + " s");
    o.digest += json(with.reports).dump() + json(without.reports).dump();
  }
  o.detail = det.str() + " (faulty/clean reports)" + (o.pass ? "" : "; " + o.detail);
  return o;
}

constexpr int kOracleTraces = 200;
constexpr int kOracleMaxOps = 6;

Outcome graph_oracle() {
  Outcome o;
  int edges = 0;
  for (int i = 0; i < kOracleTraces; ++i) {
    const auto seed = derive_seed(77, static_cast<std::uint64_t>(i));
    const int data_ops = 2 + i % (kOracleMaxOps - 1);
    auto t = testing::random_trace(seed, 2, data_ops, 1 + i % 2);
    auto got = testing::graph_keys(build_graph(t));
    auto want = testing::oracle_edges(t);
    edges += static_cast<int>(want.size());
    if (got != want) fail(o, "trace " + std::to_string(i) + " differs");
    for (const auto& e : got) {
      const auto& [src, dst, kind, table, row, sv, dv] = e;
      o.digest += std::to_string(src) + std::string(to_string(kind)) + std::to_string(dst) + table +
                  std::to_string(row) + ":" + std::to_string(sv) + ">" + std::to_string(dv) + ";";
    }
    o.digest += "|";
  }
  if (o.pass) o.detail = std::to_string(kOracleTraces) + " traces, " + std::to_string(edges) + " edges, all equal";
  return o;
}

constexpr int kLivenessSubmissions = 10000;
constexpr int kLivenessSessions = 4;

Outcome engine_liveness() {
  Outcome o;
  engine::Engine e;
  const int setup = e.open_session();
  e.execute(setup, "CREATE TABLE t (ID INT PRIMARY KEY, VERS INT, c0 INT)");
  e.execute(setup, "INSERT INTO t VALUES (1, 0, 0), (2, 0, 0), (3, 0, 0), (4, 0, 0)");
  const char* levels[] = {"READ COMMITTED", "REPEATABLE READ", "SERIALIZABLE", "REPEATABLE READ"};
  std::vector<int> sessions;
  for (int i = 0; i < kLivenessSessions; ++i) {
    sessions.push_back(e.open_session());
    e.execute(sessions.back(), std::string("SET SESSION TRANSACTION ISOLATION LEVEL ") + levels[i]);
  }
  Rng rng(4242);
  auto random_sql = [&] {
    const auto id = std::to_string(rng.uniform(1, 6));
    switch (rng.weighted({3, 1, 1, 2, 1, 5, 1, 1, 1})) {
      case 0: return std::string("BEGIN");
      case 1: return std::string("COMMIT");
      case 2: return std::string("ROLLBACK");
      case 3: return "SELECT * FROM t WHERE ID = " + id;
      case 4: return std::string("SELECT * FROM t");
      case 5: return "UPDATE t SET c0 = c0 + 1 WHERE ID = " + id;
      case 6: return "INSERT INTO t VALUES (" + id + ", 0, 0)";
      case 7: return "DELETE FROM t WHERE ID = " + id;
      default: return "UPDATE t SET c0 = 0 WHERE c0 > " + std::to_string(rng.uniform(0, 3));
    }
  };
  int blocked = 0, unblocked = 0, deadlocks = 0;
  std::set<int> waiting;
  auto harvest = [&] {
    for (auto it = waiting.begin(); it != waiting.end();) {
      if (auto r = e.take_result(*it)) {
        if (r->error && r->error->cls == ErrorClass::Deadlock) ++deadlocks;
        else ++unblocked;
        it = waiting.erase(it);
      } else {
        ++it;
      }
    }
  };
  for (int n = 0; n < kLivenessSubmissions; ++n) {
    harvest();
    std::vector<int> idle;
    for (int s : sessions)
      if (!waiting.contains(s)) idle.push_back(s);
    if (idle.empty()) {
      fail(o, "all sessions blocked after " + std::to_string(n) + " submissions");
      return o;
    }
    const int s = rng.pick(idle);
    e.submit(s, random_sql());
    if (e.pending(s)) {
      ++blocked;
      waiting.insert(s);
    } else {
      e.take_result(s);
    }
  }
  // drain: finishing the idle transactions must release every waiter
  for (int round = 0; round < 4 * kLivenessSessions && (!waiting.empty() || e.any_transaction_open()); ++round) {
    harvest();
    for (int s : sessions) {
      if (waiting.contains(s)) continue;
      e.submit(s, "COMMIT");
      if (e.pending(s)) waiting.insert(s);
      else e.take_result(s);
    }
  }
  harvest();
  if (!waiting.empty()) fail(o, std::to_string(waiting.size()) + " sessions still blocked after drain");
  if (e.any_transaction_open()) fail(o, "transactions still open after drain");
  if (blocked != unblocked + deadlocks) fail(o, "unresolved blocks");
  if (deadlocks == 0) fail(o, "no deadlock was exercised");
  std::ostringstream det;
  det << kLivenessSubmissions << " submissions, " << blocked << " blocked: " << unblocked << " unblocked, "
      << deadlocks << " deadlock aborts";
  o.detail = det.str() + (o.pass ? "" : "; " + o.detail);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "catalog fidelity", 1, catalog_fidelity},
      {2, "constraint extraction", 1, constraint_extraction},
      {3, "injected-fault detection", 7 * kFaultLimitS, injected_faults},
      {4, "zero false positives", 600, zero_false_positives},
      {5, "case-study replays", 4 * kReplayLimitS, case_study_replays},
      {6, "dependency-graph oracle", 30, graph_oracle},
  };
  bool all = true;
  std::vector<std::string> digests;
  auto report = [&](int id, const char* name, const Outcome& o, double dt, double limit) {
    const bool pass = o.pass && dt <= limit;
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail;
    std::cout.precision(2);
    std::cout << std::fixed << " [" << dt << " s, limit " << limit << " s]";
    if (o.pass && dt > limit) std::cout << " time limit exceeded";
    std::cout << std::endl;
  };

  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      fail(o, std::string("exception: ") + ex.what());
    }
    report(c.id, c.name, o, seconds_since(t0), c.limit_s);
    digests.push_back(o.digest);
  }

  {
    const auto t0 = Clock::now();
    Outcome o;
    std::vector<std::string> names;
    for (std::size_t k = 2; k < criteria.size(); ++k) {
      Outcome again;
      try {
        again = criteria[k].run();
      } catch (const std::exception& ex) {
        fail(o, std::string("exception: ") + ex.what());
        continue;
      }
      if (again.digest != digests[k] || digests[k].empty())
        fail(o, "criterion " + std::to_string(criteria[k].id) + " output differs on rerun");
      else
        names.push_back(std::to_string(criteria[k].id));
    }
    if (o.pass) {
      o.detail = "criteria";
      for (const auto& n : names) o.detail += " " + n;
      o.detail += " byte-identical on rerun";
    }
    report(7, "determinism", o, seconds_since(t0), 7 * kFaultLimitS + 600 + 4 * kReplayLimitS + 30);
  }

  {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = engine_liveness();
    } catch (const std::exception& ex) {
      fail(o, std::string("exception: ") + ex.what());
    }
    report(8, "engine liveness", o, seconds_since(t0), 60);
  }
  return all ? 0 : 1;
}
