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

// Backend contract used by the executor: one session per transaction, SQL
// text in, rows or structured errors out.

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "txpat/trace.hpp"
#include "txpat/value.hpp"

namespace txpat {

using SessionId = int;

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  int column_index(std::string_view name) const;
};

struct Completion {
  ResultSet result;
  std::int64_t affected = 0;
  std::optional<DbError> error;
  bool was_blocked = false;
  std::optional<std::int64_t> timestamp;  // backend clock, microseconds
  /// Rows read or written, when the backend reports provenance natively.
  std::vector<TouchedRow> touched;

  bool ok() const { return !error.has_value(); }
};

class TargetUnreachable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TriggerUnsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DbAdapter {
 public:
  virtual ~DbAdapter() = default;

  virtual SessionId open_session() = 0;
  virtual void close_session(SessionId s) = 0;
  /// Starts executing `sql`; at most one statement may be in flight per session.
  virtual void submit(SessionId s, const std::string& sql) = 0;
  /// Waits up to `timeout` for the in-flight statement of `s`.
  virtual std::optional<Completion> wait(SessionId s, std::chrono::milliseconds timeout) = 0;
  /// Identifier that triggers record as txn_id (CONNECTION_ID()).
  virtual std::int64_t connection_id(SessionId s) const = 0;

  virtual bool supports_triggers() const = 0;
  /// Completions carry touched rows, so no trigger log or read augmentation is needed.
  virtual bool native_provenance() const = 0;
  virtual std::string backend() const = 0;
  virtual std::chrono::milliseconds default_block_timeout() const { return std::chrono::milliseconds(1000); }
};

}  // namespace txpat
