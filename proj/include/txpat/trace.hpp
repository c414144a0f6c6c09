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

// Execution records, trace files and backend message classification.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "txpat/isolation.hpp"

namespace txpat {

enum class RecordKind : std::uint8_t { Read, Write, Begin, Commit, Rollback, Set, Other };
enum class TouchKind : std::uint8_t { Read, Insert, Update, Delete };
enum class ErrorClass : std::uint8_t {
  Crash,
  AssertionFailure,
  Deadlock,
  LockTimeout,
  SyntaxError,
  SemanticError,
  Other
};
enum class TxnOutcome : std::uint8_t { Committed, Aborted, Undetermined };

std::string_view to_string(RecordKind k);
std::string_view to_string(TouchKind k);
std::string_view to_string(ErrorClass c);
std::string_view to_string(TxnOutcome o);
std::optional<RecordKind> parse_record_kind(std::string_view s);
std::optional<TouchKind> parse_touch_kind(std::string_view s);
std::optional<ErrorClass> parse_error_class(std::string_view s);
std::optional<TxnOutcome> parse_outcome(std::string_view s);

/// Crash, assertion, deadlock, lock timeout, syntax and semantic errors end a run.
bool is_terminal(ErrorClass c);

/// Classifies a backend message by its text; unknown messages are Other.
ErrorClass classify_message(std::string_view message);

struct DbError {
  ErrorClass cls = ErrorClass::Other;
  std::string message;

  friend bool operator==(const DbError&, const DbError&) = default;
};

struct TouchedRow {
  std::string table;
  std::int64_t row_id = 0;
  std::int64_t version = 0;  // observed for reads, installed for writes
  TouchKind kind = TouchKind::Read;

  friend auto operator<=>(const TouchedRow&, const TouchedRow&) = default;
};

struct OpStatus {
  bool blocked = false;  // the statement waited for a lock at some point
  std::optional<DbError> error;

  bool ok() const { return !error.has_value(); }
  friend bool operator==(const OpStatus&, const OpStatus&) = default;
};

struct OpRecord {
  std::int64_t global_seq = 0;
  int txn = 0;  // 0 = setup session
  RecordKind op_kind = RecordKind::Other;
  std::string stmt_text;
  std::vector<TouchedRow> touched;
  std::int64_t timestamp = 0;  // microseconds
  OpStatus status;
  int step = -1;  // index into the case steps; not serialized

  friend bool operator==(const OpRecord& a, const OpRecord& b) {
    return a.global_seq == b.global_seq && a.txn == b.txn && a.op_kind == b.op_kind &&
           a.stmt_text == b.stmt_text && a.touched == b.touched && a.timestamp == b.timestamp &&
           a.status == b.status;
  }
};

struct ExecutionTrace {
  std::string pattern_id;
  IsolationLevel isolation = IsolationLevel::RR;
  std::uint64_t seed = 0;
  std::string backend;
  std::string reproducer;  // reproducer text of the executed case
  std::vector<OpRecord> records;
  std::vector<TxnOutcome> outcomes;  // index 0 = txn 1
  std::optional<DbError> terminal;
  bool degraded = false;   // write provenance incomplete
  bool timed_out = false;

  TxnOutcome outcome(int txn) const;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Line-delimited trace file: a `# {header}` line, then one JSON array per
/// record: [global_seq, txn, op_kind, stmt_text, touched, timestamp, status].
void write_trace(std::ostream& out, const ExecutionTrace& t);
std::string format_trace(const ExecutionTrace& t);
ExecutionTrace parse_trace(std::istream& in);
ExecutionTrace load_trace(const std::string& path);

/// Record kind of a statement judged from its leading keyword.
RecordKind record_kind_of(std::string_view sql);

}  // namespace txpat
