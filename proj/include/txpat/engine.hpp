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

// In-memory transactional engine over the SQL subset: MVCC version chains,
// table and row locks held to commit, RC/RR/SER read rules and switchable
// isolation faults. Not thread-safe; one coordinator drives all sessions.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "txpat/adapter.hpp"
#include "txpat/isolation.hpp"
#include "txpat/trace.hpp"

namespace txpat::engine {

namespace detail {
struct EngineState;
}

enum class Fault : std::uint8_t {
  AllowDirtyRead,
  AllowDirtyWrite,
  AllowLostUpdate,
  AllowNonRepeatableRead,
  AllowWriteSkew,
  SnapshotSeesLaterCommits,
  SerializableAsSnapshot
};

inline constexpr Fault kAllFaults[] = {Fault::AllowDirtyRead,         Fault::AllowDirtyWrite,
                                       Fault::AllowLostUpdate,        Fault::AllowNonRepeatableRead,
                                       Fault::AllowWriteSkew,         Fault::SnapshotSeesLaterCommits,
                                       Fault::SerializableAsSnapshot};

using FaultSet = std::set<Fault>;

/// "ALLOW_DIRTY_READ" etc.
std::string_view to_string(Fault f);
/// Case-insensitive; also accepts the name without the ALLOW_ prefix.
std::optional<Fault> parse_fault(std::string_view s);
/// Comma-separated list; "none" or empty = no faults. Throws std::invalid_argument.
FaultSet parse_fault_list(std::string_view s);
std::string format_fault_list(const FaultSet& faults);

class EngineBusy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EngineResult {
  ResultSet result;
  std::int64_t affected = 0;
  std::optional<DbError> error;
  std::vector<TouchedRow> touched;
  std::int64_t timestamp = 0;
  bool was_blocked = false;

  bool ok() const { return !error.has_value(); }
};

/// Committed state of one row, for inspection.
struct RowSnapshot {
  std::int64_t row_id = 0;
  std::int64_t version = 0;
  std::vector<Value> values;
};

class Engine {
 public:
  explicit Engine(FaultSet faults = {}, IsolationLevel default_level = IsolationLevel::RR);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  int open_session();
  /// Rolls back the session's open transaction.
  void close_session(int session);

  /// Runs `sql`; when it must wait for a lock the statement is parked and
  /// completes once the lock is granted or the session is chosen as a
  /// deadlock victim. Throws std::logic_error if a statement is in flight.
  void submit(int session, std::string_view sql);
  bool pending(int session) const;
  /// Completed result of the session's last statement, consumed on return.
  std::optional<EngineResult> take_result(int session);
  /// submit + take_result; throws std::logic_error when the statement blocks.
  EngineResult execute(int session, std::string_view sql);

  void set_fault(Fault f, bool on);
  const FaultSet& faults() const;
  bool any_transaction_open() const;
  bool in_transaction(int session) const;
  std::int64_t connection_id(int session) const;

  /// Write events (insert/update/delete) in application order.
  const std::vector<OpRecord>& event_log() const;
  /// Latest committed, non-deleted rows of a table in row order.
  std::vector<RowSnapshot> committed_rows(const std::string& table) const;
  std::vector<std::string> column_names(const std::string& table) const;
  /// Current logical clock in microseconds.
  std::int64_t now() const;

 private:
  std::unique_ptr<detail::EngineState> st_;
};

/// DbAdapter over an in-process Engine. In native mode completions carry
/// touched rows; in trigger mode they do not and write provenance must come
/// from trigger logs.
class EngineAdapter : public DbAdapter {
 public:
  enum class Mode : std::uint8_t { Native, Trigger };

  explicit EngineAdapter(FaultSet faults = {}, Mode mode = Mode::Native);

  SessionId open_session() override;
  void close_session(SessionId s) override;
  void submit(SessionId s, const std::string& sql) override;
  std::optional<Completion> wait(SessionId s, std::chrono::milliseconds timeout) override;
  std::int64_t connection_id(SessionId s) const override;
  bool supports_triggers() const override { return mode_ == Mode::Trigger; }
  bool native_provenance() const override { return mode_ == Mode::Native; }
  std::string backend() const override;
  std::chrono::milliseconds default_block_timeout() const override {
    return std::chrono::milliseconds(200);
  }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  Mode mode_;
};

/// "2024-01-01 00:00:00.000001" for a microsecond count since the Unix epoch.
std::string format_datetime_us(std::int64_t us);
/// Inverse of format_datetime_us; nullopt on malformed input.
std::optional<std::int64_t> parse_datetime_us(std::string_view s);

}  // namespace txpat::engine
