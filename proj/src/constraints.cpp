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

#include "txpat/constraints.hpp"

#include <stdexcept>

namespace txpat {

std::vector<StmtTypeConstraint> extract_stmt_type(const AnomalyPattern& p) {
  std::vector<StmtTypeConstraint> out(static_cast<std::size_t>(p.txn_count()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i].txn = static_cast<int>(i) + 1;
  for (const auto& op : p.ops) {
    auto& c = out.at(static_cast<std::size_t>(op.txn) - 1);
    switch (op.kind) {
      case OpKind::Read: ++c.n_R; break;
      case OpKind::Write: ++c.n_W; break;
      case OpKind::Abort: ++c.n_B; break;
      case OpKind::Commit: ++c.n_C; break;
    }
  }
  return out;
}

DataAccessConstraint extract_data_access(const AnomalyPattern& p) {
  DataAccessConstraint dac;
  std::map<int, int> intra;
  for (const auto& op : p.ops) {
    int idx = ++intra[op.txn];
    if (op.is_data()) dac.entries[{op.txn, idx}] = {op.var, op.version};
  }
  return dac;
}

ScheduleOrder extract_schedule(const AnomalyPattern& p) {
  ScheduleOrder s;
  s.seq.reserve(p.ops.size());
  for (const auto& op : p.ops) s.seq.push_back(op.txn);
  return s;
}

ConstraintSet extract_constraints(const AnomalyPattern& p) {
  return {extract_stmt_type(p), extract_data_access(p), extract_schedule(p)};
}

std::vector<OpHandle> schedule_handles(const ScheduleOrder& schedule) {
  std::vector<OpHandle> out;
  std::map<int, int> intra;
  for (int t : schedule.seq) out.push_back({t, ++intra[t]});
  return out;
}

AnomalyPattern reconstruct(const ConstraintSet& c) {
  AnomalyPattern p;
  std::map<std::string, int> top;
  std::map<int, int> data_seen;
  for (const auto& h : schedule_handles(c.schedule)) {
    if (h.txn < 1 || static_cast<std::size_t>(h.txn) > c.stmt_types.size()) {
      throw PatternValidationError("schedule names an unknown transaction", p.ops.size());
    }
    const auto& st = c.stmt_types[static_cast<std::size_t>(h.txn) - 1];
    PatternOp op;
    op.txn = h.txn;
    auto it = c.data_access.entries.find(h);
    if (it != c.data_access.entries.end()) {
      op.var = it->second.var;
      op.version = it->second.version;
      op.kind = op.version == top[op.var] + 1 ? OpKind::Write : OpKind::Read;
      if (op.kind == OpKind::Write) top[op.var] = op.version;
      ++data_seen[h.txn];
    } else {
      if (data_seen[h.txn] != st.n_R + st.n_W) {
        throw PatternValidationError("terminal op before the transaction's data ops", p.ops.size());
      }
      op.kind = st.n_B == 1 ? OpKind::Abort : OpKind::Commit;
    }
    p.ops.push_back(op);
  }
  validate_pattern(p);
  auto check = extract_stmt_type(p);
  if (check != c.stmt_types) {
    throw PatternValidationError("statement-type counts disagree with the data-access map", 0);
  }
  return p;
}

}  // namespace txpat
