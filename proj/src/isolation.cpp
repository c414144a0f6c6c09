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

#include "txpat/isolation.hpp"

#include "txpat/text.hpp"

namespace txpat {

std::string_view to_string(IsolationLevel level) {
  switch (level) {
    case IsolationLevel::RU: return "RU";
    case IsolationLevel::RC: return "RC";
    case IsolationLevel::RR: return "RR";
    case IsolationLevel::SER: return "SER";
  }
  return "?";
}

std::string_view sql_name(IsolationLevel level) {
  switch (level) {
    case IsolationLevel::RU: return "READ UNCOMMITTED";
    case IsolationLevel::RC: return "READ COMMITTED";
    case IsolationLevel::RR: return "REPEATABLE READ";
    case IsolationLevel::SER: return "SERIALIZABLE";
  }
  return "?";
}

std::optional<IsolationLevel> parse_isolation(std::string_view text) {
  const auto t = text::to_upper(text::trim(text));
  for (auto level : kAllLevels) {
    if (t == to_string(level) || t == sql_name(level)) return level;
  }
  if (t == "SERIALIZABLE" || t == "S") return IsolationLevel::SER;
  return std::nullopt;
}

}  // namespace txpat
