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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "txpat/campaign.hpp"

using namespace txpat;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = std::string(TXPAT_SOURCE_DIR) + "/scenarios/";

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("txpat-" + name + "-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Campaign, ParseTarget) {
  EXPECT_EQ(parse_target("engine").kind, TargetSpec::Kind::Engine);
  EXPECT_EQ(parse_target("engine-triggers").mode, engine::EngineAdapter::Mode::Trigger);
  auto ext = parse_target("external:mysql://localhost:3306");
  EXPECT_EQ(ext.kind, TargetSpec::Kind::External);
  EXPECT_EQ(ext.endpoint, "mysql://localhost:3306");
  EXPECT_THROW(parse_target("oracle"), std::invalid_argument);
  for (const char* t : {"engine", "engine-triggers", "external:db:1"}) EXPECT_EQ(format_target(parse_target(t)), t);
}

TEST(Campaign, ExternalTargetIsUnreachable) {
  EXPECT_THROW(make_adapter(parse_target("external:db:1"), {}), TargetUnreachable);
  CampaignConfig cfg;
  cfg.target = parse_target("external:db:1");
  EXPECT_THROW(run_campaign(cfg), TargetUnreachable);
}

TEST(Campaign, LevelList) {
  EXPECT_EQ(parse_level_list("all"),
            (std::vector<IsolationLevel>{IsolationLevel::RC, IsolationLevel::RR, IsolationLevel::SER}));
  EXPECT_EQ(parse_level_list("ser, rc"), (std::vector<IsolationLevel>{IsolationLevel::SER, IsolationLevel::RC}));
  EXPECT_THROW(parse_level_list("snapshot"), std::invalid_argument);
}

TEST(Campaign, ConfigFile) {
  auto dir = temp_dir("cfg");
  fs::create_directories(dir);
  auto path = dir / "c.conf";
  std::ofstream(path) << "# comment\n"
                         "target = engine-triggers\n"
                         "isolation = rc,ser\n"
                         "cases = 7\n"
                         "seed = 99\n"
                         "faults = ALLOW_DIRTY_READ\n"
                         "patterns = lost-update, dirty-read\n"
                         "tables = 2\n"
                         "block_timeout_ms = 5\n";
  CampaignConfig cfg;
  load_config_file(cfg, path.string());
  EXPECT_EQ(cfg.target.mode, engine::EngineAdapter::Mode::Trigger);
  EXPECT_EQ(cfg.levels, (std::vector<IsolationLevel>{IsolationLevel::RC, IsolationLevel::SER}));
  EXPECT_EQ(cfg.cases, 7);
  EXPECT_EQ(cfg.seed, 99u);
  EXPECT_EQ(cfg.faults, (engine::FaultSet{engine::Fault::AllowDirtyRead}));
  EXPECT_EQ(cfg.patterns, (std::vector<std::string>{"lost-update", "dirty-read"}));
  EXPECT_EQ(cfg.exec.block_timeout.count(), 5);
  EXPECT_THROW(apply_setting(cfg, "colour", "blue"), std::invalid_argument);
  EXPECT_THROW(apply_setting(cfg, "cases", "many"), std::invalid_argument);
  std::ofstream(path) << "no equals sign\n";
  EXPECT_THROW(load_config_file(cfg, path.string()), std::invalid_argument);
  fs::remove_all(dir);
}

TEST(Campaign, WorkListIsRoundRobin) {
  CampaignConfig cfg;
  cfg.levels = {IsolationLevel::RC, IsolationLevel::SER};
  const auto& cat = builtin_catalog();
  auto w = work_list(cfg, cat);
  ASSERT_GE(w.size(), 4u);
  EXPECT_EQ(w[0].first, IsolationLevel::RC);
  EXPECT_EQ(w[1].first, IsolationLevel::SER);
  for (const auto& [level, p] : w) EXPECT_TRUE(is_violation(*p, level));
  std::size_t ser = 0;
  for (const auto& p : cat) ser += is_violation(p, IsolationLevel::SER);
  EXPECT_EQ(std::count_if(w.begin(), w.end(), [](const auto& e) { return e.first == IsolationLevel::SER; }),
            static_cast<std::ptrdiff_t>(ser));
}

TEST(Campaign, ZeroBudgetRunsNothing) {
  CampaignConfig cfg;
  cfg.cases = 0;
  auto s = run_campaign(cfg);
  EXPECT_EQ(s.generated, 0);
  EXPECT_EQ(s.executed, 0);
  EXPECT_FALSE(s.found_bugs());
}

TEST(Campaign, UnknownPatternRejected) {
  CampaignConfig cfg;
  cfg.patterns = {"no-such-pattern"};
  EXPECT_THROW(run_campaign(cfg), std::invalid_argument);
}

TEST(Campaign, CleanEngineReportsNothing) {
  CampaignConfig cfg;
  cfg.levels = parse_level_list("all");
  cfg.cases = 90;
  cfg.seed = 5;
  auto s = run_campaign(cfg);
  EXPECT_EQ(s.generated, 90);
  EXPECT_FALSE(s.found_bugs());
  EXPECT_EQ(s.implicit_bugs, 0);
  EXPECT_EQ(s.explicit_bugs, 0);
}

TEST(Campaign, FaultyEngineIsCaughtAndPersisted) {
  auto dir = temp_dir("out");
  CampaignConfig cfg;
  cfg.levels = {IsolationLevel::RR};
  cfg.patterns = {"lost-update"};
  cfg.faults = {engine::Fault::AllowLostUpdate};
  cfg.cases = 40;
  cfg.seed = 3;
  cfg.out_dir = dir.string();
  auto s = run_campaign(cfg);
  ASSERT_TRUE(s.found_bugs());
  EXPECT_EQ(s.unique.size(), 1u);
  EXPECT_EQ(s.unique[0].pattern_id, "lost-update");
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  auto stem = report_stem(s.unique_case[0], s.unique[0]);
  EXPECT_EQ(stem.substr(6), "-lost-update-rr");
  ASSERT_TRUE(fs::exists(dir / "reports" / (stem + ".sql")));
  ASSERT_TRUE(fs::exists(dir / "reports" / (stem + ".json")));
  EXPECT_TRUE(fs::exists(dir / "traces" / ("case-" + std::to_string(s.unique_case[0]) + ".trace")));

  // the persisted reproducer triggers the same report again
  auto r = replay_file((dir / "reports" / (stem + ".sql")).string(), cfg.target, cfg.faults, builtin_catalog());
  bool again = false;
  for (const auto& b : r.reports) again |= b.pattern_id == "lost-update";
  EXPECT_TRUE(again);
  auto clean = replay_file((dir / "reports" / (stem + ".sql")).string(), cfg.target, {}, builtin_catalog());
  EXPECT_TRUE(clean.reports.empty());
  fs::remove_all(dir);
}

TEST(Campaign, WorkersDoNotChangeResults) {
  CampaignConfig cfg;
  cfg.levels = parse_level_list("all");
  cfg.faults = {engine::Fault::AllowDirtyWrite};
  cfg.cases = 60;
  cfg.seed = 8;
  auto one = run_campaign(cfg);
  cfg.workers = 4;
  auto four = run_campaign(cfg);
  EXPECT_EQ(summary_json(one, cfg).dump(), summary_json(four, cfg).dump());
}

TEST(Campaign, ReplayEmptyFileIsError) {
  auto dir = temp_dir("empty");
  fs::create_directories(dir);
  std::ofstream(dir / "e.sql") << "";
  EXPECT_ANY_THROW(replay_file((dir / "e.sql").string(), parse_target("engine"), {}, builtin_catalog()));
  EXPECT_ANY_THROW(replay_file((dir / "missing.sql").string(), parse_target("engine"), {}, builtin_catalog()));
  fs::remove_all(dir);
}

TEST(Campaign, ScenarioReplays) {
  struct Case {
    const char* file;
    engine::Fault fault;
    const char* pattern;
  };
  for (const Case& c : {Case{"lost_update_rr.sql", engine::Fault::AllowLostUpdate, "lost-update"},
                        Case{"dirty_read_rc.sql", engine::Fault::AllowDirtyRead, "dirty-read"},
                        Case{"stale_snapshot_rr.sql", engine::Fault::SnapshotSeesLaterCommits, "ext-2"},
                        Case{"insert_scan_ser.sql", engine::Fault::SerializableAsSnapshot, "ext-36"},
                        Case{"double_booking_ser.sql", engine::Fault::SerializableAsSnapshot, "ext-36"}}) {
    auto with = replay_file(kScenarios + c.file, parse_target("engine"), {c.fault}, builtin_catalog());
    ASSERT_EQ(with.reports.size(), 1u) << c.file;
    EXPECT_EQ(with.reports[0].pattern_id, c.pattern);
    auto without = replay_file(kScenarios + c.file, parse_target("engine"), {}, builtin_catalog());
    EXPECT_TRUE(without.reports.empty()) << c.file;
  }
}
