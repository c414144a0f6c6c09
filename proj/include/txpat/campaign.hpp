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

// Campaign orchestration: generate, execute and detect over a budget of
// cases, plus replay of reproducer files and report persistence.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "txpat/adapter.hpp"
#include "txpat/detector.hpp"
#include "txpat/engine.hpp"
#include "txpat/executor.hpp"
#include "txpat/txn_gen.hpp"

namespace txpat {

struct TargetSpec {
  enum class Kind : std::uint8_t { Engine, External };
  Kind kind = Kind::Engine;
  engine::EngineAdapter::Mode mode = engine::EngineAdapter::Mode::Native;
  std::string endpoint;  // External only
};

/// "engine", "engine-triggers" or "external:<endpoint>".
TargetSpec parse_target(const std::string& text);
std::string format_target(const TargetSpec& t);

/// Fresh backend for one case. Throws TargetUnreachable for external targets.
std::unique_ptr<DbAdapter> make_adapter(const TargetSpec& t, const engine::FaultSet& faults);

struct CampaignConfig {
  TargetSpec target;
  engine::FaultSet faults;
  std::vector<IsolationLevel> levels{IsolationLevel::RR};
  std::vector<std::string> patterns;  // empty = every pattern disallowed at the level
  std::int64_t cases = 100;           // < 0 = unbounded (duration only)
  double duration_s = 0;              // 0 = no time budget
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir;  // empty = nothing persisted
  std::string catalog_path;  // empty = built-in catalog
  GenConfig gen;
  ExecutorConfig exec;
};

/// "rc", "rr,ser", "all" (= RC, RR, SER).
std::vector<IsolationLevel> parse_level_list(const std::string& text);

/// Applies one `key=value` setting; throws std::invalid_argument on unknown keys or bad values.
void apply_setting(CampaignConfig& cfg, const std::string& key, const std::string& value);
/// Reads a key=value file (`#` comments) into `cfg`.
void load_config_file(CampaignConfig& cfg, const std::string& path);

struct CaseOutcome {
  std::int64_t index = 0;
  std::string pattern_id;
  IsolationLevel level = IsolationLevel::RR;
  std::uint64_t seed = 0;
  bool generated = false;
  std::string generation_error;
  Detection detection;
  ExecutionTrace trace;
};

struct CampaignSummary {
  std::int64_t generated = 0;
  std::int64_t generation_failures = 0;
  std::int64_t executed = 0;
  std::int64_t eligible = 0;  // passed phase 1 and was pattern-matched
  std::int64_t explicit_cases = 0;
  std::int64_t corrupt = 0;
  std::map<std::string, std::int64_t> discarded;  // by error class
  std::int64_t explicit_bugs = 0;
  std::int64_t implicit_bugs = 0;
  std::map<std::string, std::int64_t> bugs_by_pattern;
  std::vector<BugReport> unique;
  std::vector<std::int64_t> unique_case;  // case index of each unique report
  double wall_s = 0;                      // not serialized

  bool found_bugs() const { return !unique.empty(); }
};

nlohmann::json summary_json(const CampaignSummary& s, const CampaignConfig& cfg);

/// (level, pattern) pairs in round-robin order.
std::vector<std::pair<IsolationLevel, const AnomalyPattern*>> work_list(const CampaignConfig& cfg,
                                                                        const std::vector<AnomalyPattern>& catalog);

CaseOutcome run_one(const CampaignConfig& cfg, const AnomalyPattern& p, IsolationLevel level, std::int64_t index,
                    std::span<const AnomalyPattern> catalog);

CampaignSummary run_campaign(const CampaignConfig& cfg);
CampaignSummary run_campaign(const CampaignConfig& cfg, const std::vector<AnomalyPattern>& catalog);

struct ReplayResult {
  TransactionCase input;
  ExecutionTrace trace;
  Detection detection;
  std::vector<BugReport> reports;  // deduplicated
};

ReplayResult replay(const TransactionCase& c, const TargetSpec& target, const engine::FaultSet& faults,
                    std::span<const AnomalyPattern> catalog, const ExecutorConfig& exec = {});
ReplayResult replay_file(const std::string& path, const TargetSpec& target, const engine::FaultSet& faults,
                         std::span<const AnomalyPattern> catalog, const ExecutorConfig& exec = {});

/// `<dir>/<stem>.sql` with the reproducer and `<dir>/<stem>.json` with the metadata.
void write_report(const std::string& dir, const std::string& stem, const BugReport& r);
std::string report_stem(std::int64_t case_index, const BugReport& r);

}  // namespace txpat
