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

// Drives a TransactionCase against a backend with one session per
// transaction, tolerating blocking, and records an ExecutionTrace.

#include <chrono>
#include <string>
#include <vector>

#include "txpat/adapter.hpp"
#include "txpat/schema.hpp"
#include "txpat/trace.hpp"
#include "txpat/txn_gen.hpp"

namespace txpat {

struct ExecutorConfig {
  /// 0 = the adapter's default_block_timeout().
  std::chrono::milliseconds block_timeout{0};
  std::chrono::milliseconds case_timeout{30000};
};

struct SessionHandle {
  SessionId id = 0;
  int txn = 0;
  bool blocked = false;
  int pending_step = -1;  // step index in flight, -1 = idle
  std::vector<std::string> messages;
};

std::string log_table_name(const std::string& table);

/// Log table and AFTER INSERT/UPDATE/DELETE triggers for every table that
/// has an ID column.
std::vector<std::string> recording_ddl(const Schema& s);

/// Runs recording_ddl through `setup`. Throws TriggerUnsupported when the
/// backend has no triggers, std::runtime_error when a statement fails.
void install_recording(DbAdapter& adapter, SessionId setup, const Schema& s);

struct AugmentedRead {
  std::string sql;
  /// (table, ID column alias, VERS column alias or empty) per base table.
  struct Probe {
    std::string table;
    std::string id_alias;
    std::string vers_alias;
  };
  std::vector<Probe> probes;
};

/// Adds `alias.ID AS __txpat_id_k` (and VERS) projections for every base
/// table of a SELECT; returns the input unchanged when it is not a SELECT.
AugmentedRead augment_read(const std::string& sql, const Schema& s);

/// Executes the schedule; the database must already hold the case's schema and data.
ExecutionTrace run_schedule(const TransactionCase& c, DbAdapter& adapter, const ExecutorConfig& cfg = {});

/// Runs the init SQL, installs recording when the backend needs it, then run_schedule.
ExecutionTrace run_case(const TransactionCase& c, DbAdapter& adapter, const ExecutorConfig& cfg = {});

}  // namespace txpat
