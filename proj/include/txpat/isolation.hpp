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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace txpat {

// Ordered weakest to strongest; comparisons follow the declaration order.
enum class IsolationLevel : std::uint8_t { RU = 0, RC = 1, RR = 2, SER = 3 };

inline constexpr IsolationLevel kAllLevels[] = {
    IsolationLevel::RU, IsolationLevel::RC, IsolationLevel::RR, IsolationLevel::SER};

/// Short tag: "RU", "RC", "RR", "SER".
std::string_view to_string(IsolationLevel level);

/// SQL spelling used in SET SESSION TRANSACTION ISOLATION LEVEL.
std::string_view sql_name(IsolationLevel level);

/// Accepts short tags (case-insensitive) and the SQL spellings.
std::optional<IsolationLevel> parse_isolation(std::string_view text);

}  // namespace txpat
