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

#include "txpat/campaign.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "txpat/rng.hpp"
#include "txpat/text.hpp"

namespace txpat {

using json = nlohmann::json;
namespace fs = std::filesystem;

TargetSpec parse_target(const std::string& text) {
  TargetSpec t;
  const auto s = std::string(text::trim(text));
  if (text::iequals(s, "engine")) return t;
  if (text::iequals(s, "engine-triggers")) {
    t.mode = engine::EngineAdapter::Mode::Trigger;
    return t;
  }
  if (text::istarts_with(s, "external:")) {
    t.kind = TargetSpec::Kind::External;
    t.endpoint = s.substr(9);
    return t;
  }
  throw std::invalid_argument("unknown target '" + s + "'");
}

std::string format_target(const TargetSpec& t) {
  if (t.kind == TargetSpec::Kind::External) return "external:" + t.endpoint;
  return t.mode == engine::EngineAdapter::Mode::Native ? "engine" : "engine-triggers";
}

std::unique_ptr<DbAdapter> make_adapter(const TargetSpec& t, const engine::FaultSet& faults) {
  if (t.kind == TargetSpec::Kind::External) {
    throw TargetUnreachable("no adapter available for external endpoint '" + t.endpoint + "'");
  }
  return std::make_unique<engine::EngineAdapter>(faults, t.mode);
}

std::vector<IsolationLevel> parse_level_list(const std::string& text) {
  std::vector<IsolationLevel> out;
  for (const auto& part : text::split(text, ',')) {
    auto p = std::string(text::trim(part));
    if (p.empty()) continue;
    if (text::iequals(p, "all")) {
      for (auto l : {IsolationLevel::RC, IsolationLevel::RR, IsolationLevel::SER}) {
        if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
      }
      continue;
    }
    auto l = parse_isolation(p);
    if (!l) throw std::invalid_argument("unknown isolation level '" + p + "'");
    if (std::find(out.begin(), out.end(), *l) == out.end()) out.push_back(*l);
  }
  if (out.empty()) throw std::invalid_argument("no isolation level selected");
  return out;
}

namespace {

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    auto n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer for " + key + ": '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    auto d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number for " + key + ": '" + v + "'");
  }
}

}  // namespace

void apply_setting(CampaignConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const auto key = text::to_lower(text::trim(raw_key));
  const auto v = std::string(text::trim(raw_value));
  if (key == "target") {
    cfg.target = parse_target(v);
  } else if (key == "isolation") {
    cfg.levels = parse_level_list(v);
  } else if (key == "patterns") {
    cfg.patterns.clear();
    if (!text::iequals(v, "all")) {
      for (const auto& p : text::split(v, ',')) {
        auto id = std::string(text::trim(p));
        if (!id.empty()) cfg.patterns.push_back(id);
      }
    }
  } else if (key == "cases") {
    cfg.cases = to_int(key, v);
  } else if (key == "duration") {
    cfg.duration_s = to_double(key, v);
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(to_int(key, v));
  } else if (key == "faults") {
    cfg.faults = engine::parse_fault_list(v);
  } else if (key == "out") {
    cfg.out_dir = v;
  } else if (key == "workers") {
    cfg.workers = static_cast<int>(to_int(key, v));
  } else if (key == "catalog") {
    cfg.catalog_path = v;
  } else if (key == "tables") {
    cfg.gen.schema.max_tables = static_cast<int>(to_int(key, v));
    cfg.gen.schema.min_tables = std::min(cfg.gen.schema.min_tables, cfg.gen.schema.max_tables);
  } else if (key == "rows") {
    cfg.gen.schema.max_rows = static_cast<int>(to_int(key, v));
    cfg.gen.schema.min_rows = std::min(cfg.gen.schema.min_rows, cfg.gen.schema.max_rows);
  } else if (key == "pool_size") {
    cfg.gen.pool_size = static_cast<int>(to_int(key, v));
  } else if (key == "p_id") {
    cfg.gen.sql.p_id = to_double(key, v);
  } else if (key == "p_empty") {
    cfg.gen.sql.p_empty = to_double(key, v);
  } else if (key == "insert_write_probability") {
    cfg.gen.insert_write_probability = to_double(key, v);
  } else if (key == "delete_write_probability") {
    cfg.gen.delete_write_probability = to_double(key, v);
  } else if (key == "block_timeout_ms") {
    cfg.exec.block_timeout = std::chrono::milliseconds(to_int(key, v));
  } else if (key == "case_timeout_ms") {
    cfg.exec.case_timeout = std::chrono::milliseconds(to_int(key, v));
  } else {
    throw std::invalid_argument("unknown setting '" + key + "'");
  }
}

void load_config_file(CampaignConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    apply_setting(cfg, std::string(t.substr(0, eq)), std::string(t.substr(eq + 1)));
  }
}

json summary_json(const CampaignSummary& s, const CampaignConfig& cfg) {
  json levels = json::array();
  for (auto l : cfg.levels) levels.push_back(std::string(to_string(l)));
  json uniq = json::array();
  for (std::size_t i = 0; i < s.unique.size(); ++i) {
    const auto& r = s.unique[i];
    uniq.push_back({{"case", s.unique_case[i]},
                    {"phase", std::string(to_string(r.phase))},
                    {"pattern", r.pattern_id},
                    {"isolation", std::string(to_string(r.level))},
                    {"class", r.failure_class},
                    {"backend", r.backend}});
  }
  return json{{"target", format_target(cfg.target)},
              {"faults", engine::format_fault_list(cfg.faults)},
              {"levels", levels},
              {"seed", cfg.seed},
              {"cases_generated", s.generated},
              {"generation_failures", s.generation_failures},
              {"cases_executed", s.executed},
              {"cases_eligible", s.eligible},
              {"cases_explicit", s.explicit_cases},
              {"cases_corrupt", s.corrupt},
              {"discarded", s.discarded},
              {"explicit_bugs", s.explicit_bugs},
              {"implicit_bugs", s.implicit_bugs},
              {"bugs_by_pattern", s.bugs_by_pattern},
              {"unique_bugs", uniq}};
}

std::vector<std::pair<IsolationLevel, const AnomalyPattern*>> work_list(const CampaignConfig& cfg,
                                                                        const std::vector<AnomalyPattern>& catalog) {
  std::vector<std::vector<const AnomalyPattern*>> per_level;
  for (auto level : cfg.levels) {
    std::vector<const AnomalyPattern*> ps;
    for (const auto& p : catalog) {
      if (!is_violation(p, level)) continue;
      if (!cfg.patterns.empty() && std::find(cfg.patterns.begin(), cfg.patterns.end(), p.id) == cfg.patterns.end()) {
        continue;
      }
      ps.push_back(&p);
    }
    per_level.push_back(std::move(ps));
  }
  std::vector<std::pair<IsolationLevel, const AnomalyPattern*>> out;
  std::size_t longest = 0;
  for (const auto& ps : per_level) longest = std::max(longest, ps.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (std::size_t l = 0; l < per_level.size(); ++l) {
      if (i < per_level[l].size()) out.emplace_back(cfg.levels[l], per_level[l][i]);
    }
  }
  return out;
}

CaseOutcome run_one(const CampaignConfig& cfg, const AnomalyPattern& p, IsolationLevel level, std::int64_t index,
                    std::span<const AnomalyPattern> catalog) {
  CaseOutcome o;
  o.index = index;
  o.pattern_id = p.id;
  o.level = level;
  o.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
  TransactionCase c;
  try {
    c = generate_case(p, level, o.seed, cfg.gen);
    o.generated = true;
  } catch (const std::exception& e) {
    o.generation_error = e.what();
    return o;
  }
  auto adapter = make_adapter(cfg.target, cfg.faults);
  o.trace = run_case(c, *adapter, cfg.exec);
  o.detection = analyze(o.trace, level, catalog);
  return o;
}

CampaignSummary run_campaign(const CampaignConfig& cfg) {
  if (cfg.catalog_path.empty()) return run_campaign(cfg, builtin_catalog());
  return run_campaign(cfg, load_catalog_file(cfg.catalog_path));
}

CampaignSummary run_campaign(const CampaignConfig& cfg, const std::vector<AnomalyPattern>& catalog) {
  if (cfg.levels.empty()) throw std::invalid_argument("no isolation level selected");
  for (const auto& id : cfg.patterns) {
    if (!find_pattern(catalog, id)) throw std::invalid_argument("unknown pattern '" + id + "'");
  }
  const auto work = work_list(cfg, catalog);
  if (work.empty()) throw std::invalid_argument("no pattern is disallowed at the selected levels");
  if (cfg.target.kind == TargetSpec::Kind::External) make_adapter(cfg.target, cfg.faults);

  const auto start = std::chrono::steady_clock::now();
  auto out_of_time = [&] {
    if (cfg.duration_s <= 0) return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() >= cfg.duration_s;
  };
  const bool bounded = cfg.cases >= 0;
  if (!bounded && cfg.duration_s <= 0) throw std::invalid_argument("campaign needs a case or duration budget");

  std::atomic<std::int64_t> next{0};
  std::mutex mu;
  std::map<std::int64_t, CaseOutcome> results;
  auto worker = [&] {
    for (;;) {
      if (out_of_time()) return;
      const std::int64_t i = next.fetch_add(1);
      if (bounded && i >= cfg.cases) return;
      const auto& [level, p] = work[static_cast<std::size_t>(i) % work.size()];
      auto o = run_one(cfg, *p, level, i, catalog);
      o.trace.records.shrink_to_fit();
      std::lock_guard lk(mu);
      results.emplace(i, std::move(o));
    }
  };
  const int n_workers = std::max(1, cfg.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  CampaignSummary s;
  std::vector<BugReport> all;
  std::vector<std::int64_t> all_case;
  if (!cfg.out_dir.empty()) {
    fs::create_directories(fs::path(cfg.out_dir) / "reports");
    fs::create_directories(fs::path(cfg.out_dir) / "traces");
  }
  for (auto& [i, o] : results) {
    ++s.generated;
    if (!o.generated) {
      ++s.generation_failures;
      continue;
    }
    ++s.executed;
    switch (o.detection.verdict) {
      case Verdict::Eligible: ++s.eligible; break;
      case Verdict::Explicit: ++s.explicit_cases; break;
      case Verdict::Corrupt: ++s.corrupt; break;
      case Verdict::Discarded: ++s.discarded[std::string(to_string(*o.detection.discard_class))]; break;
    }
    for (const auto& r : o.detection.reports) {
      if (r.phase == Phase::Explicit) {
        ++s.explicit_bugs;
      } else {
        ++s.implicit_bugs;
        ++s.bugs_by_pattern[r.pattern_id];
      }
      all.push_back(r);
      all_case.push_back(i);
    }
    if (!o.detection.reports.empty() && !cfg.out_dir.empty()) {
      std::ofstream tf(fs::path(cfg.out_dir) / "traces" / ("case-" + std::to_string(i) + ".trace"));
      write_trace(tf, o.trace);
    }
  }
  s.generated = static_cast<std::int64_t>(results.size());
  auto uniq = dedup(all);
  for (const auto& u : uniq) {
    for (std::size_t k = 0; k < all.size(); ++k) {
      if (all[k] == u) {
        s.unique_case.push_back(all_case[k]);
        break;
      }
    }
  }
  s.unique = std::move(uniq);
  s.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!cfg.out_dir.empty()) {
    for (std::size_t k = 0; k < s.unique.size(); ++k) {
      write_report((fs::path(cfg.out_dir) / "reports").string(), report_stem(s.unique_case[k], s.unique[k]),
                   s.unique[k]);
    }
    std::ofstream sf(fs::path(cfg.out_dir) / "summary.json");
    sf << summary_json(s, cfg).dump(2) << "\n";
  }
  return s;
}

ReplayResult replay(const TransactionCase& c, const TargetSpec& target, const engine::FaultSet& faults,
                    std::span<const AnomalyPattern> catalog, const ExecutorConfig& exec) {
  ReplayResult r;
  r.input = c;
  auto adapter = make_adapter(target, faults);
  r.trace = run_case(c, *adapter, exec);
  r.detection = analyze(r.trace, c.isolation, catalog);
  r.reports = dedup(r.detection.reports);
  return r;
}

ReplayResult replay_file(const std::string& path, const TargetSpec& target, const engine::FaultSet& faults,
                         std::span<const AnomalyPattern> catalog, const ExecutorConfig& exec) {
  return replay(load_reproducer(path), target, faults, catalog, exec);
}

std::string report_stem(std::int64_t case_index, const BugReport& r) {
  std::ostringstream ss;
  ss << std::setw(6) << std::setfill('0') << case_index << "-"
     << (r.phase == Phase::Explicit ? text::to_lower(r.failure_class) : r.pattern_id) << "-"
     << text::to_lower(to_string(r.level));
  return ss.str();
}

void write_report(const std::string& dir, const std::string& stem, const BugReport& r) {
  fs::create_directories(dir);
  std::ofstream sql(fs::path(dir) / (stem + ".sql"));
  sql << r.reproducer;
  std::ofstream meta(fs::path(dir) / (stem + ".json"));
  meta << json(r).dump(2) << "\n";
}

}  // namespace txpat
