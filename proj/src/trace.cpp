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

#include "txpat/trace.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "txpat/text.hpp"

namespace txpat {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 7> kRecordNames = {"Read", "Write",    "Begin", "Commit",
                                                          "Rollback", "Set", "Other"};
constexpr std::array<std::string_view, 4> kTouchNames = {"read", "insert", "update", "delete"};
constexpr std::array<std::string_view, 7> kErrorNames = {
    "Crash", "AssertionFailure", "Deadlock", "LockTimeout", "SyntaxError", "SemanticError", "Other"};
constexpr std::array<std::string_view, 3> kOutcomeNames = {"Committed", "Aborted", "Undetermined"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (text::iequals(names[i], s)) return static_cast<E>(i);
  }
  return std::nullopt;
}

bool contains_ci(std::string_view hay, std::string_view needle) {
  return text::to_lower(hay).find(text::to_lower(needle)) != std::string::npos;
}

json status_json(const OpStatus& s) {
  if (s.ok()) return s.blocked ? "BLOCKED_THEN_OK" : "OK";
  return json{{"class", to_string(s.error->cls)},
              {"message", s.error->message},
              {"blocked", s.blocked}};
}

OpStatus status_from(const json& j, int line) {
  OpStatus s;
  if (j.is_string()) {
    auto v = j.get<std::string>();
    if (v == "OK") return s;
    if (v == "BLOCKED_THEN_OK") {
      s.blocked = true;
      return s;
    }
    throw TraceParseError("unknown status '" + v + "'", line);
  }
  if (!j.is_object()) throw TraceParseError("status must be a string or object", line);
  auto cls = parse_error_class(j.at("class").get<std::string>());
  if (!cls) throw TraceParseError("unknown error class", line);
  s.error = DbError{*cls, j.at("message").get<std::string>()};
  s.blocked = j.value("blocked", false);
  return s;
}

json error_json(const std::optional<DbError>& e) {
  if (!e) return nullptr;
  return json{{"class", to_string(e->cls)}, {"message", e->message}};
}

}  // namespace

std::string_view to_string(RecordKind k) { return kRecordNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(TouchKind k) { return kTouchNames[static_cast<std::size_t>(k)]; }
std::string_view to_string(ErrorClass c) { return kErrorNames[static_cast<std::size_t>(c)]; }
std::string_view to_string(TxnOutcome o) { return kOutcomeNames[static_cast<std::size_t>(o)]; }
std::optional<RecordKind> parse_record_kind(std::string_view s) { return lookup<RecordKind>(kRecordNames, s); }
std::optional<TouchKind> parse_touch_kind(std::string_view s) { return lookup<TouchKind>(kTouchNames, s); }
std::optional<ErrorClass> parse_error_class(std::string_view s) { return lookup<ErrorClass>(kErrorNames, s); }
std::optional<TxnOutcome> parse_outcome(std::string_view s) { return lookup<TxnOutcome>(kOutcomeNames, s); }

bool is_terminal(ErrorClass c) { return c != ErrorClass::Other; }

ErrorClass classify_message(std::string_view m) {
  if (contains_ci(m, "lost connection") || contains_ci(m, "server has gone away") ||
      contains_ci(m, "connection refused") || contains_ci(m, "server restart") ||
      contains_ci(m, "crash") || contains_ci(m, "segmentation fault")) {
    return ErrorClass::Crash;
  }
  if (contains_ci(m, "assertion") || contains_ci(m, "assert failed")) return ErrorClass::AssertionFailure;
  if (contains_ci(m, "deadlock")) return ErrorClass::Deadlock;
  if (contains_ci(m, "lock wait timeout")) return ErrorClass::LockTimeout;
  if (contains_ci(m, "syntax")) return ErrorClass::SyntaxError;
  if (contains_ci(m, "unknown column") || contains_ci(m, "unknown table") ||
      contains_ci(m, "doesn't exist") || contains_ci(m, "does not exist") ||
      contains_ci(m, "ambiguous")) {
    return ErrorClass::SemanticError;
  }
  return ErrorClass::Other;
}

TxnOutcome ExecutionTrace::outcome(int txn) const {
  if (txn < 1 || static_cast<std::size_t>(txn) > outcomes.size()) return TxnOutcome::Undetermined;
  return outcomes[static_cast<std::size_t>(txn) - 1];
}

void write_trace(std::ostream& out, const ExecutionTrace& t) {
  json outcomes = json::array();
  for (auto o : t.outcomes) outcomes.push_back(to_string(o));
  json header{{"pattern", t.pattern_id},     {"isolation", to_string(t.isolation)},
              {"seed", t.seed},              {"backend", t.backend},
              {"outcomes", outcomes},        {"terminal", error_json(t.terminal)},
              {"degraded", t.degraded},      {"timed_out", t.timed_out},
              {"reproducer", t.reproducer}};
  out << "# " << header.dump() << "\n";
  for (const auto& r : t.records) {
    json touched = json::array();
    for (const auto& w : r.touched) touched.push_back({w.table, w.row_id, w.version, to_string(w.kind)});
    json rec = json::array({r.global_seq, r.txn, to_string(r.op_kind), r.stmt_text, touched, r.timestamp,
                            status_json(r.status)});
    out << rec.dump() << "\n";
  }
}

std::string format_trace(const ExecutionTrace& t) {
  std::ostringstream out;
  write_trace(out, t);
  return out.str();
}

ExecutionTrace parse_trace(std::istream& in) {
  ExecutionTrace t;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    auto s = text::trim(line);
    if (s.empty()) continue;
    try {
      if (s.front() == '#') {
        if (header) throw TraceParseError("duplicate header", lineno);
        header = true;
        auto h = json::parse(s.substr(1));
        t.pattern_id = h.value("pattern", "");
        auto lv = parse_isolation(h.value("isolation", "RR"));
        if (!lv) throw TraceParseError("unknown isolation level", lineno);
        t.isolation = *lv;
        t.seed = h.value("seed", std::uint64_t{0});
        t.backend = h.value("backend", "");
        for (const auto& o : h.value("outcomes", json::array())) {
          auto oc = parse_outcome(o.get<std::string>());
          if (!oc) throw TraceParseError("unknown outcome", lineno);
          t.outcomes.push_back(*oc);
        }
        if (h.contains("terminal") && h["terminal"].is_object()) {
          auto cls = parse_error_class(h["terminal"].at("class").get<std::string>());
          if (!cls) throw TraceParseError("unknown error class", lineno);
          t.terminal = DbError{*cls, h["terminal"].at("message").get<std::string>()};
        }
        t.degraded = h.value("degraded", false);
        t.timed_out = h.value("timed_out", false);
        t.reproducer = h.value("reproducer", "");
        continue;
      }
      auto j = json::parse(s);
      if (!j.is_array() || j.size() != 7) throw TraceParseError("record must be a 7-element array", lineno);
      OpRecord r;
      r.global_seq = j[0].get<std::int64_t>();
      r.txn = j[1].get<int>();
      auto k = parse_record_kind(j[2].get<std::string>());
      if (!k) throw TraceParseError("unknown op kind", lineno);
      r.op_kind = *k;
      r.stmt_text = j[3].get<std::string>();
      for (const auto& w : j[4]) {
        if (!w.is_array() || w.size() != 4) throw TraceParseError("touched entry must have 4 fields", lineno);
        auto tk = parse_touch_kind(w[3].get<std::string>());
        if (!tk) throw TraceParseError("unknown touch kind", lineno);
        r.touched.push_back({w[0].get<std::string>(), w[1].get<std::int64_t>(), w[2].get<std::int64_t>(), *tk});
      }
      r.timestamp = j[5].get<std::int64_t>();
      r.status = status_from(j[6], lineno);
      t.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw TraceParseError(e.what(), lineno);
    }
  }
  if (!header && t.records.empty()) throw TraceParseError("empty trace", lineno);
  return t;
}

ExecutionTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_trace(in);
}

RecordKind record_kind_of(std::string_view sql) {
  auto s = text::trim(sql);
  while (s.size() >= 2 && s.substr(0, 2) == "/*") {
    auto e = s.find("*/");
    if (e == std::string_view::npos) break;
    s = text::trim(s.substr(e + 2));
  }
  if (text::istarts_with(s, "SELECT") || text::istarts_with(s, "(")) return RecordKind::Read;
  if (text::istarts_with(s, "UPDATE") || text::istarts_with(s, "INSERT") ||
      text::istarts_with(s, "DELETE")) {
    return RecordKind::Write;
  }
  if (text::istarts_with(s, "BEGIN") || text::istarts_with(s, "START")) return RecordKind::Begin;
  if (text::istarts_with(s, "COMMIT")) return RecordKind::Commit;
  if (text::istarts_with(s, "ROLLBACK")) return RecordKind::Rollback;
  if (text::istarts_with(s, "SET")) return RecordKind::Set;
  return RecordKind::Other;
}

}  // namespace txpat
