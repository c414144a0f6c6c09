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

// Constraint extraction: statement-type counts per transaction, the
// data-access map and the global schedule order of a pattern.

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "txpat/pattern.hpp"

namespace txpat {

struct StmtTypeConstraint {
  int txn = 0;
  int n_R = 0;
  int n_W = 0;
  int n_B = 0;  // rollbacks (A tokens)
  int n_C = 0;

  int total() const { return n_R + n_W + n_B + n_C; }
  friend bool operator==(const StmtTypeConstraint&, const StmtTypeConstraint&) = default;
};

/// Identifies the intra_index-th operation (1-based, counting C/A too) of txn.
struct OpHandle {
  int txn = 0;
  int intra_index = 0;

  friend auto operator<=>(const OpHandle&, const OpHandle&) = default;
};

struct VarVersion {
  std::string var;
  int version = 0;

  friend bool operator==(const VarVersion&, const VarVersion&) = default;
};

struct DataAccessConstraint {
  std::map<OpHandle, VarVersion> entries;

  friend bool operator==(const DataAccessConstraint&, const DataAccessConstraint&) = default;
};

struct ScheduleOrder {
  std::vector<int> seq;

  friend bool operator==(const ScheduleOrder&, const ScheduleOrder&) = default;
};

struct ConstraintSet {
  std::vector<StmtTypeConstraint> stmt_types;  // indexed by txn - 1
  DataAccessConstraint data_access;
  ScheduleOrder schedule;
};

std::vector<StmtTypeConstraint> extract_stmt_type(const AnomalyPattern& p);
DataAccessConstraint extract_data_access(const AnomalyPattern& p);
ScheduleOrder extract_schedule(const AnomalyPattern& p);
ConstraintSet extract_constraints(const AnomalyPattern& p);

/// Handle of every op of `schedule`, in schedule order.
std::vector<OpHandle> schedule_handles(const ScheduleOrder& schedule);

/// Rebuilds the pattern from its constraint triple. Data ops are writes when
/// they install the next version of their variable and reads otherwise; the
/// terminal op is an abort iff n_B is 1. Throws PatternValidationError when
/// the triple is inconsistent.
AnomalyPattern reconstruct(const ConstraintSet& c);

}  // namespace txpat
