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

#include "txpat/engine.hpp"
#include "txpat/text.hpp"

namespace txpat {

int ResultSet::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (text::iequals(columns[i], name)) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace txpat

namespace txpat::engine {

EngineAdapter::EngineAdapter(FaultSet faults, Mode mode) : engine_(std::move(faults)), mode_(mode) {}

SessionId EngineAdapter::open_session() { return engine_.open_session(); }

void EngineAdapter::close_session(SessionId s) { engine_.close_session(s); }

void EngineAdapter::submit(SessionId s, const std::string& sql) { engine_.submit(s, sql); }

std::optional<Completion> EngineAdapter::wait(SessionId s, std::chrono::milliseconds) {
  // The engine settles every statement synchronously, so there is nothing to wait for.
  auto r = engine_.take_result(s);
  if (!r) return std::nullopt;
  Completion c;
  c.result = std::move(r->result);
  c.affected = r->affected;
  c.error = std::move(r->error);
  c.was_blocked = r->was_blocked;
  c.timestamp = r->timestamp;
  if (mode_ == Mode::Native) c.touched = std::move(r->touched);
  return c;
}

std::int64_t EngineAdapter::connection_id(SessionId s) const { return engine_.connection_id(s); }

std::string EngineAdapter::backend() const {
  std::string out = mode_ == Mode::Native ? "engine" : "engine-triggers";
  if (!engine_.faults().empty()) out += "[" + format_fault_list(engine_.faults()) + "]";
  return out;
}

}  // namespace txpat::engine
