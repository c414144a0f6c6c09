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

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "txpat/campaign.hpp"

using namespace txpat;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitBugs = 1;
constexpr int kExitError = 2;

const std::vector<AnomalyPattern>& catalog_for(const std::string& path, std::vector<AnomalyPattern>& storage) {
  if (path.empty()) return builtin_catalog();
  storage = load_catalog_file(path);
  return storage;
}

void print_reports(const std::vector<BugReport>& reports) {
  for (const auto& r : reports) {
    std::cout << to_string(r.phase) << " " << (r.pattern_id.empty() ? r.failure_class : r.pattern_id) << " @ "
              << to_string(r.level) << " on " << r.backend;
    for (const auto& b : r.bindings) std::cout << " " << b.var << "=" << b.table << ":" << b.row_id;
    if (!r.message.empty()) std::cout << " (" << r.message << ")";
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"txpat: anomaly-pattern guided transaction testing"};
  app.require_subcommand(1);

  // campaign
  auto* camp = app.add_subcommand("campaign", "Run a generate/execute/detect campaign");
  std::string c_config, c_target, c_isolation, c_patterns, c_faults, c_out;
  std::int64_t c_cases = 0;
  double c_duration = 0;
  std::uint64_t c_seed = 0;
  int c_workers = 1;
  auto* o_config = camp->add_option("--config", c_config, "key=value settings file");
  auto* o_target = camp->add_option("--target", c_target, "engine | engine-triggers | external:<endpoint>");
  auto* o_iso = camp->add_option("--isolation", c_isolation, "rc | rr | ser | all, comma separated");
  auto* o_pat = camp->add_option("--patterns", c_patterns, "pattern ids or all");
  auto* o_cases = camp->add_option("--cases", c_cases, "case budget");
  auto* o_dur = camp->add_option("--duration", c_duration, "time budget in seconds");
  auto* o_seed = camp->add_option("--seed", c_seed, "campaign seed");
  auto* o_faults = camp->add_option("--faults", c_faults, "engine fault switches, comma separated");
  auto* o_out = camp->add_option("--out", c_out, "output directory");
  auto* o_workers = camp->add_option("--workers", c_workers, "parallel workers");

  // replay
  auto* rep = app.add_subcommand("replay", "Execute a reproducer file and run detection");
  std::string r_file, r_target = "engine", r_faults, r_catalog;
  rep->add_option("file", r_file, "reproducer file")->required();
  rep->add_option("--target", r_target, "engine | engine-triggers | external:<endpoint>");
  rep->add_option("--faults", r_faults, "engine fault switches");
  rep->add_option("--catalog", r_catalog, "catalog file");
  bool r_trace = false;
  rep->add_flag("--trace", r_trace, "print the execution trace");

  // catalog
  auto* cat = app.add_subcommand("catalog", "Inspect pattern catalogs");
  cat->require_subcommand(1);
  auto* cat_list = cat->add_subcommand("list", "Print the catalog");
  std::string cl_file;
  cat_list->add_option("--file", cl_file, "catalog file (default: built-in)");
  auto* cat_val = cat->add_subcommand("validate", "Validate a catalog file");
  std::string cv_file;
  cat_val->add_option("file", cv_file, "catalog file")->required();

  // check
  auto* chk = app.add_subcommand("check", "Run the detector on a saved trace");
  std::string k_file, k_iso, k_catalog;
  chk->add_option("file", k_file, "trace file")->required();
  chk->add_option("--isolation", k_iso, "level to check against (default: the trace's)");
  chk->add_option("--catalog", k_catalog, "catalog file");

  // generate
  auto* gen = app.add_subcommand("generate", "Print a generated test case");
  std::string g_pattern, g_iso = "rr";
  std::uint64_t g_seed = 1;
  gen->add_option("--pattern", g_pattern, "pattern id")->required();
  gen->add_option("--isolation", g_iso, "isolation level");
  gen->add_option("--seed", g_seed, "seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*camp) {
      CampaignConfig cfg;
      if (*o_config) load_config_file(cfg, c_config);
      if (*o_target) cfg.target = parse_target(c_target);
      if (*o_iso) cfg.levels = parse_level_list(c_isolation);
      if (*o_pat) apply_setting(cfg, "patterns", c_patterns);
      if (*o_cases) cfg.cases = c_cases;
      if (*o_dur) {
        cfg.duration_s = c_duration;
        if (!*o_cases) cfg.cases = -1;
      }
      if (*o_seed) cfg.seed = c_seed;
      if (*o_faults) cfg.faults = engine::parse_fault_list(c_faults);
      if (*o_out) cfg.out_dir = c_out;
      if (*o_workers) cfg.workers = c_workers;
      auto s = run_campaign(cfg);
      std::cout << summary_json(s, cfg).dump(2) << "\n";
      std::cerr << "wall time " << s.wall_s << " s\n";
      return s.found_bugs() ? kExitBugs : kExitClean;
    }
    if (*rep) {
      std::vector<AnomalyPattern> storage;
      const auto& catalog = catalog_for(r_catalog, storage);
      auto r = replay_file(r_file, parse_target(r_target), engine::parse_fault_list(r_faults), catalog);
      if (r_trace) write_trace(std::cout, r.trace);
      if (r.trace.terminal) std::cout << "terminal: " << r.trace.terminal->message << "\n";
      print_reports(r.reports);
      if (r.reports.empty()) std::cout << "no bugs\n";
      return r.reports.empty() ? kExitClean : kExitBugs;
    }
    if (*cat_list) {
      std::vector<AnomalyPattern> storage;
      write_catalog(std::cout, catalog_for(cl_file, storage));
      return kExitClean;
    }
    if (*cat_val) {
      auto c = load_catalog_file(cv_file);
      std::cout << c.size() << " patterns ok\n";
      return kExitClean;
    }
    if (*chk) {
      std::vector<AnomalyPattern> storage;
      const auto& catalog = catalog_for(k_catalog, storage);
      auto trace = load_trace(k_file);
      IsolationLevel level = trace.isolation;
      if (!k_iso.empty()) {
        auto l = parse_isolation(k_iso);
        if (!l) throw std::invalid_argument("unknown isolation level '" + k_iso + "'");
        level = *l;
      }
      auto reports = dedup(detect(trace, level, catalog));
      print_reports(reports);
      if (reports.empty()) std::cout << "no bugs\n";
      return reports.empty() ? kExitClean : kExitBugs;
    }
    if (*gen) {
      const auto* p = find_pattern(builtin_catalog(), g_pattern);
      if (!p) throw std::invalid_argument("unknown pattern '" + g_pattern + "'");
      auto l = parse_isolation(g_iso);
      if (!l) throw std::invalid_argument("unknown isolation level '" + g_iso + "'");
      std::cout << format_reproducer(generate_case(*p, *l, g_seed));
      return kExitClean;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitClean;
}
