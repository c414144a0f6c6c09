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

#include "txpat/detector.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "txpat/text.hpp"

namespace txpat {

using json = nlohmann::json;

std::string_view to_string(DepKind k) {
  switch (k) {
    case DepKind::WW: return "ww";
    case DepKind::WR: return "wr";
    case DepKind::RW: return "rw";
  }
  return "?";
}

std::string_view to_string(Phase p) { return p == Phase::Explicit ? "Explicit" : "Implicit"; }

bool DependencyGraph::has_edge(int src, int dst, DepKind kind, const std::string& table, std::int64_t row,
                               std::int64_t src_version, std::int64_t dst_version) const {
  return std::any_of(edges.begin(), edges.end(), [&](const DependencyEdge& e) {
    return e.src == src && e.dst == dst && e.kind == kind && e.row_id == row && e.src_version == src_version &&
           e.dst_version == dst_version && e.table == table;
  });
}

namespace {

bool installs(TouchKind k) { return k != TouchKind::Read; }

bool is_snapshot_begin(const OpRecord& r) {
  return r.op_kind == RecordKind::Begin && text::to_upper(r.stmt_text).find("CONSISTENT SNAPSHOT") != std::string::npos;
}

// Under RR the read view is fixed by the first statement that reads through it.
bool starts_view(const OpRecord& r, IsolationLevel level) {
  if (level != IsolationLevel::RR) return r.op_kind == RecordKind::Read || r.op_kind == RecordKind::Write;
  if (r.op_kind == RecordKind::Read) return true;
  return r.op_kind == RecordKind::Write &&
         std::any_of(r.touched.begin(), r.touched.end(), [](const TouchedRow& t) { return !installs(t.kind); });
}

struct Access {
  RowRef row;
  std::int64_t version;
  int txn;
  std::size_t pos;
  std::int64_t ts;
};

struct Indexed {
  std::vector<const OpRecord*> recs;       // effect order
  std::map<int, std::vector<std::size_t>> by_txn;
  std::map<int, std::size_t> terminal;     // last COMMIT/ROLLBACK
  std::map<int, std::size_t> start;
  std::map<int, std::size_t> first_data;

  explicit Indexed(const ExecutionTrace& t) : recs(effective_records(t)) {
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = *recs[i];
      by_txn[r.txn].push_back(i);
      if (r.op_kind == RecordKind::Commit || r.op_kind == RecordKind::Rollback) terminal[r.txn] = i;
      if (is_snapshot_begin(r)) start[r.txn] = i;
      if (!start.count(r.txn) && starts_view(r, t.isolation)) start[r.txn] = i;
      if (r.op_kind == RecordKind::Read || r.op_kind == RecordKind::Write) first_data.try_emplace(r.txn, i);
    }
    for (const auto& [txn, i] : first_data) start.try_emplace(txn, i);
  }
};

}  // namespace

std::vector<const OpRecord*> effective_records(const ExecutionTrace& trace) {
  std::map<int, std::size_t> last_begin;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.op_kind == RecordKind::Begin) last_begin[r.txn] = i;
  }
  std::vector<const OpRecord*> out;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (r.txn < 1) continue;
    auto it = last_begin.find(r.txn);
    if (it != last_begin.end() && i < it->second) continue;
    out.push_back(&r);
  }
  std::stable_sort(out.begin(), out.end(), [](const OpRecord* a, const OpRecord* b) {
    return std::tie(a->timestamp, a->global_seq) < std::tie(b->timestamp, b->global_seq);
  });
  return out;
}

DependencyGraph build_graph(const ExecutionTrace& trace) {
  Indexed ix(trace);
  DependencyGraph g;
  for (const auto& [txn, idx] : ix.by_txn) {
    TxnNode n{txn, ix.recs[idx.front()]->timestamp, ix.recs[idx.back()]->timestamp, trace.outcome(txn)};
    if (auto s = ix.start.find(txn); s != ix.start.end()) n.begin_ts = ix.recs[s->second]->timestamp;
    if (auto e = ix.terminal.find(txn); e != ix.terminal.end()) n.end_ts = ix.recs[e->second]->timestamp;
    g.nodes[txn] = n;
  }

  std::vector<Access> reads, writes;
  std::map<RowRef, std::int64_t> max_installed;
  for (std::size_t i = 0; i < ix.recs.size(); ++i) {
    const auto& r = *ix.recs[i];
    if (!r.status.ok()) continue;
    for (const auto& t : r.touched) {
      Access a{{t.table, t.row_id}, t.version, r.txn, i, r.timestamp};
      if (!installs(t.kind)) {
        reads.push_back(a);
        continue;
      }
      if (t.version < 0) throw TraceCorrupt("negative version on " + t.table + " row " + std::to_string(t.row_id));
      auto m = max_installed.find(a.row);
      if (m != max_installed.end() && t.version > m->second + 1) {
        throw TraceCorrupt("version gap on " + t.table + " row " + std::to_string(t.row_id) + ": " +
                           std::to_string(m->second) + " -> " + std::to_string(t.version));
      }
      if (m == max_installed.end()) {
        max_installed[a.row] = t.version;
      } else {
        m->second = std::max(m->second, t.version);
      }
      writes.push_back(a);
    }
  }

  auto latest_install = [&](const RowRef& row, std::int64_t version, std::size_t before) -> const Access* {
    const Access* best = nullptr;
    for (const auto& w : writes) {
      if (w.row == row && w.version == version && w.pos < before) best = &w;
    }
    return best;
  };

  std::set<DependencyEdge> edges;
  for (const auto& w : writes) {
    if (const Access* p = latest_install(w.row, w.version - 1, w.pos); p && p->txn != w.txn) {
      edges.insert({p->txn, w.txn, DepKind::WW, w.row.table, w.row.row_id, p->version, w.version, p->ts, w.ts});
    }
  }
  for (const auto& r : reads) {
    if (const Access* p = latest_install(r.row, r.version, r.pos); p && p->txn != r.txn) {
      edges.insert({p->txn, r.txn, DepKind::WR, r.row.table, r.row.row_id, p->version, r.version, p->ts, r.ts});
    }
    for (const auto& w : writes) {
      if (w.row == r.row && w.version == r.version + 1 && w.txn != r.txn) {
        edges.insert({r.txn, w.txn, DepKind::RW, r.row.table, r.row.row_id, r.version, w.version, r.ts, w.ts});
      }
    }
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

PatternSignature derive_signature(const AnomalyPattern& p) {
  PatternSignature sig{p.id, {}, p.ops};
  std::set<SignatureEdge> edges;
  for (const auto& a : p.ops) {
    if (!a.is_data()) continue;
    for (const auto& b : p.ops) {
      if (!b.is_data() || a.var != b.var || a.txn == b.txn) continue;
      const bool aw = a.kind == OpKind::Write, bw = b.kind == OpKind::Write;
      if (aw && bw && b.version == a.version + 1) edges.insert({a.txn, b.txn, DepKind::WW, a.var, a.version, b.version});
      if (aw && !bw && b.version == a.version) edges.insert({a.txn, b.txn, DepKind::WR, a.var, a.version, b.version});
      if (!aw && bw && b.version == a.version + 1) edges.insert({a.txn, b.txn, DepKind::RW, a.var, a.version, b.version});
    }
  }
  sig.edges.assign(edges.begin(), edges.end());
  return sig;
}

namespace {

class Matcher {
 public:
  Matcher(const DependencyGraph& g, const ExecutionTrace& t, const PatternSignature& s)
      : g_(g), trace_(t), sig_(s), ix_(t), bound_(s.ops.size(), 0) {
    for (std::size_t i = 0; i < s.ops.size(); ++i) {
      if (s.ops[i].is_terminal()) {
        first_terminal_ = i;
        break;
      }
    }
  }

  std::optional<Match> run() {
    if (!search(0, 0)) return std::nullopt;
    Match m;
    m.txns = txns_;
    for (const auto& [v, b] : vars_) m.vars[v] = b.row;
    for (auto pos : bound_) m.records.push_back(ix_.recs[pos]->global_seq);
    return m;
  }

 private:
  struct VarBind {
    RowRef row;
    std::int64_t base;
  };

  bool txn_used(int trace_txn) const {
    return std::any_of(txns_.begin(), txns_.end(), [&](const auto& kv) { return kv.second == trace_txn; });
  }

  bool row_used(const RowRef& r) const {
    return std::any_of(vars_.begin(), vars_.end(), [&](const auto& kv) { return kv.second.row == r; });
  }

  std::vector<int> candidates(int ptxn) const {
    if (auto it = txns_.find(ptxn); it != txns_.end()) return {it->second};
    std::vector<int> out;
    for (const auto& [t, idx] : ix_.by_txn) {
      if (!txn_used(t)) out.push_back(t);
    }
    return out;
  }

  bool edges_consistent() const {
    for (const auto& e : sig_.edges) {
      auto s = txns_.find(e.src), d = txns_.find(e.dst);
      auto v = vars_.find(e.var);
      if (s == txns_.end() || d == txns_.end() || v == vars_.end()) continue;
      if (!g_.has_edge(s->second, d->second, e.kind, v->second.row.table, v->second.row.row_id,
                       v->second.base + e.src_version, v->second.base + e.dst_version)) {
        return false;
      }
    }
    return true;
  }

  bool start_rule() const {
    if (first_terminal_ >= sig_.ops.size()) return true;
    const std::size_t limit = bound_[first_terminal_];
    for (const auto& [p, t] : txns_) {
      auto it = ix_.start.find(t);
      if (it == ix_.start.end() || it->second >= limit) return false;
    }
    return true;
  }

  bool bind_txn(int ptxn, int t, std::size_t op, std::size_t pos) {
    const bool fresh = !txns_.count(ptxn);
    if (fresh) txns_[ptxn] = t;
    bound_[op] = pos;
    bool ok = edges_consistent() && (op < first_terminal_ || start_rule()) && search(op + 1, pos + 1);
    if (!ok && fresh) txns_.erase(ptxn);
    return ok;
  }

  bool search(std::size_t op, std::size_t min_pos) {
    if (op == sig_.ops.size()) return true;
    const auto& pop = sig_.ops[op];
    for (int t : candidates(pop.txn)) {
      auto byt = ix_.by_txn.find(t);
      if (byt == ix_.by_txn.end()) continue;
      if (pop.is_terminal()) {
        auto term = ix_.terminal.find(t);
        if (term == ix_.terminal.end() || term->second < min_pos) continue;
        const auto want = pop.kind == OpKind::Commit ? TxnOutcome::Committed : TxnOutcome::Aborted;
        if (trace_.outcome(t) != want) continue;
        if (bind_txn(pop.txn, t, op, term->second)) return true;
        continue;
      }
      for (std::size_t pos : byt->second) {
        if (pos < min_pos) continue;
        const auto& rec = *ix_.recs[pos];
        const bool data_rec = rec.op_kind == RecordKind::Read || rec.op_kind == RecordKind::Write;
        if (!data_rec || (pop.kind == OpKind::Write && rec.op_kind != RecordKind::Write) || !rec.status.ok()) continue;
        for (const auto& tr : rec.touched) {
          if ((pop.kind == OpKind::Read) == installs(tr.kind)) continue;
          RowRef row{tr.table, tr.row_id};
          auto vb = vars_.find(pop.var);
          if (vb != vars_.end()) {
            if (vb->second.row != row || vb->second.base + pop.version != tr.version) continue;
            if (bind_txn(pop.txn, t, op, pos)) return true;
            continue;
          }
          const std::int64_t base = tr.version - pop.version;
          if (base < -1 || row_used(row)) continue;
          vars_[pop.var] = VarBind{row, base};
          if (bind_txn(pop.txn, t, op, pos)) return true;
          vars_.erase(pop.var);
        }
      }
    }
    return false;
  }

  const DependencyGraph& g_;
  const ExecutionTrace& trace_;
  const PatternSignature& sig_;
  Indexed ix_;
  std::vector<std::size_t> bound_;
  std::size_t first_terminal_ = static_cast<std::size_t>(-1);
  std::map<int, int> txns_;
  std::map<std::string, VarBind> vars_;
};

}  // namespace

std::optional<Match> match(const DependencyGraph& graph, const ExecutionTrace& trace, const PatternSignature& sig) {
  if (sig.ops.empty()) return std::nullopt;
  return Matcher(graph, trace, sig).run();
}

void to_json(json& j, const BugReport& r) {
  json bindings = json::array();
  for (const auto& b : r.bindings) bindings.push_back({{"var", b.var}, {"table", b.table}, {"row", b.row_id}});
  json txns = json::object();
  for (const auto& [p, t] : r.txn_binding) txns[std::to_string(p)] = t;
  j = json{{"pattern", r.pattern_id},
           {"isolation", std::string(to_string(r.level))},
           {"phase", std::string(to_string(r.phase))},
           {"backend", r.backend},
           {"class", r.failure_class},
           {"message", r.message},
           {"bindings", bindings},
           {"txns", txns},
           {"records", r.records},
           {"reproducer", r.reproducer}};
}

void from_json(const json& j, BugReport& r) {
  r = BugReport{};
  r.pattern_id = j.at("pattern").get<std::string>();
  auto lvl = parse_isolation(j.at("isolation").get<std::string>());
  if (!lvl) throw std::invalid_argument("bad isolation in report");
  r.level = *lvl;
  r.phase = j.at("phase").get<std::string>() == "Explicit" ? Phase::Explicit : Phase::Implicit;
  r.backend = j.at("backend").get<std::string>();
  r.failure_class = j.at("class").get<std::string>();
  r.message = j.value("message", "");
  for (const auto& b : j.at("bindings")) {
    r.bindings.push_back({b.at("var").get<std::string>(), b.at("table").get<std::string>(), b.at("row").get<std::int64_t>()});
  }
  for (const auto& [k, v] : j.at("txns").items()) r.txn_binding[std::stoi(k)] = v.get<int>();
  r.records = j.at("records").get<std::vector<std::int64_t>>();
  r.reproducer = j.at("reproducer").get<std::string>();
}

Detection analyze(const ExecutionTrace& trace, IsolationLevel level, std::span<const AnomalyPattern> catalog) {
  Detection d;
  if (trace.terminal) {
    const auto cls = trace.terminal->cls;
    if (cls == ErrorClass::Crash || cls == ErrorClass::AssertionFailure) {
      BugReport r;
      r.level = level;
      r.reproducer = trace.reproducer;
      r.phase = Phase::Explicit;
      r.backend = trace.backend;
      r.failure_class = std::string(to_string(cls));
      r.message = trace.terminal->message;
      d.verdict = Verdict::Explicit;
      d.reports.push_back(std::move(r));
      return d;
    }
    if (is_terminal(cls)) {
      d.verdict = Verdict::Discarded;
      d.discard_class = cls;
      return d;
    }
  }
  if (trace.timed_out) {
    d.verdict = Verdict::Discarded;
    d.discard_class = ErrorClass::LockTimeout;
    return d;
  }
  DependencyGraph g;
  try {
    g = build_graph(trace);
  } catch (const TraceCorrupt&) {
    d.verdict = Verdict::Corrupt;
    return d;
  }
  std::set<std::pair<std::string, std::map<int, int>>> seen;
  for (const auto& p : catalog) {
    if (!is_violation(p, level)) continue;
    auto m = match(g, trace, derive_signature(p));
    if (!m || !seen.insert({p.id, m->txns}).second) continue;
    BugReport r;
    r.pattern_id = p.id;
    r.level = level;
    for (const auto& [v, row] : m->vars) r.bindings.push_back({v, row.table, row.row_id});
    r.txn_binding = m->txns;
    r.records = m->records;
    r.reproducer = trace.reproducer;
    r.phase = Phase::Implicit;
    r.backend = trace.backend;
    r.failure_class = "anomaly";
    d.reports.push_back(std::move(r));
  }
  return d;
}

std::vector<BugReport> detect(const ExecutionTrace& trace, IsolationLevel level,
                              std::span<const AnomalyPattern> catalog) {
  return analyze(trace, level, catalog).reports;
}

std::vector<BugReport> dedup(const std::vector<BugReport>& reports) {
  std::set<std::tuple<Phase, std::string, IsolationLevel, std::string, std::string>> seen;
  std::vector<BugReport> out;
  for (const auto& r : reports) {
    if (seen.insert({r.phase, r.pattern_id, r.level, r.backend, r.failure_class}).second) out.push_back(r);
  }
  return out;
}

}  // namespace txpat
