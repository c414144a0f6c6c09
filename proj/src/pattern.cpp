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

#include "txpat/pattern.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "txpat/text.hpp"

namespace txpat {

namespace {

// id, pattern, disallowed levels. Rows 6, 7, 30 and 31 of the extended table
// are printed with ops after a commit or with non-consecutive versions; they
// are stored here in the repaired form that satisfies the pattern invariants.
constexpr const char* kCatalogData = R"(
dirty-write	W1[x1]W2[x2]C1C2	ALL
dirty-read	W1[x1]R2[x1]A1C2	RC, RR, SER
lost-update	R1[x0]W2[x1]C2W1[x2]C1	RR, SER
non-repeatable-read	R1[x0]W2[x1]C2R1[x1]C1	RR, SER
write-skew	R1[x0]W2[x1]W2[y1]C2R1[y1]C1	SER
read-skew	R1[x0]R2[y0]W1[y1]W2[x1]C1C2	SER
ext-1	W1[x1]R2[x1]C1C2	RC, RR, SER
ext-2	W1[x1]C1R2[x1]C2	RR
ext-3	W1[x1]R2[x1]C2W1[x2]C1	RC, RR, SER
ext-4	W1[x1]W2[y1]W2[x2]W1[y2]C1C2	ALL
ext-5	W1[x1]W2[y1]W1[y2]W2[x2]C1C2	ALL
ext-6	W1[x1]W2[y1]W1[y2]C1W2[x2]C2	ALL
ext-7	W1[x1]W2[y1]W2[x2]C2W1[y2]C1	ALL
ext-8	W1[x1]W2[y1]W2[x2]R1[y1]C1C2	ALL
ext-9	W1[x1]W2[y1]R1[y1]W2[x2]C1C2	ALL
ext-10	W1[x1]W2[y1]W2[x2]C2R1[y1]C1	ALL
ext-11	W1[x1]W2[y1]R1[y1]C1W2[x2]C2	RC, RR, SER
ext-12	W1[x1]R2[y0]W2[x2]W1[y1]C1C2	ALL
ext-13	W1[x1]R2[y0]W1[y1]W2[x2]C1C2	ALL
ext-14	W1[x1]R2[y0]W2[x2]C2W1[y1]C1	ALL
ext-15	W1[x1]R2[y0]W1[y1]C1W2[x2]C2	RR, SER
ext-16	W1[x1]W2[y1]R2[x1]W1[y2]C1C2	ALL
ext-17	W1[x1]W2[y1]W1[y2]R2[x1]C1C2	ALL
ext-18	W1[x1]W2[y1]R2[x1]C2W1[y2]C1	RC, RR, SER
ext-19	W1[x1]W2[y1]W1[y2]C1R2[x1]C2	ALL
ext-20	W1[x1]W2[y1]R2[x1]R1[y1]C1C2	RC, RR, SER
ext-21	W1[x1]W2[y1]R1[y1]R2[x1]C1C2	RC, RR, SER
ext-22	W1[x1]W2[y1]R2[x1]C2R1[y1]C1	RC, RR, SER
ext-23	W1[x1]W2[y1]R1[y1]C1R2[x1]C2	RC, RR, SER
ext-24	W1[x1]R2[y0]R2[x1]W1[y1]C1C2	RC, RR, SER
ext-25	W1[x1]R2[y0]W1[y1]R2[x1]C1C2	RC, RR, SER
ext-26	W1[x1]R2[y0]R2[x1]C2W1[y1]C1	RC, RR, SER
ext-27	W1[x1]R2[y0]W1[y1]C1R2[x1]C2	RR, SER
ext-28	R1[x0]W2[y1]W2[x1]W1[y2]C1C2	RC, RR, SER
ext-29	R1[x0]W2[y1]W1[y2]W2[x1]C1C2	RC, RR, SER
ext-30	R1[x0]W2[x1]W2[y1]C2W1[y2]C1	RR, SER
ext-31	R1[x0]W2[y1]W1[y2]C1W2[x1]C2	ALL
ext-32	R1[x0]W2[y1]W2[x1]R1[y1]C1C2	RC, RR, SER
ext-33	R1[x0]W2[y1]R1[y1]W2[x1]C1C2	RC, RR, SER
ext-34	R1[x0]W2[y1]W2[x1]C2R1[y1]C1	SER
ext-35	R1[x0]W2[y1]R1[y1]C1W2[x1]C2	RC, RR, SER
ext-36	W1[x1]W2[y1]C2R1[y1]C1	SER
ext-37	R1[x0]R2[y0]W2[x1]W1[y1]C1C2	SER
ext-38	R1[x0]R2[y0]W1[y1]W2[x1]C1C2	SER
ext-39	R1[x0]R2[y0]W2[x1]C2W1[y1]C1	SER
ext-40	R1[x0]R2[y0]W1[y1]C1W2[x1]C2	SER
)";

bool is_ident_char(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

class Scanner {
 public:
  explicit Scanner(std::string_view s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool done() {
    skip_ws();
    return pos_ >= s_.size();
  }
  std::size_t pos() const { return pos_; }

  char take() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of pattern");
    return s_[pos_++];
  }
  void expect(char c) {
    if (take() != c) fail_at(pos_ - 1, std::string("expected '") + c + "'");
  }
  int number() {
    skip_ws();
    std::size_t start = pos_;
    long long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 1'000'000) fail("number too large");
      ++pos_;
    }
    if (start == pos_) fail("expected a number");
    return static_cast<int>(v);
  }
  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && is_ident_char(s_[pos_])) ++pos_;
    if (start == pos_) fail("expected a variable name");
    return std::string(s_.substr(start, pos_ - start));
  }
  [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }
  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    throw PatternSyntaxError("pattern syntax error at offset " + std::to_string(at) + ": " + msg, at);
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string op_text(const PatternOp& op) {
  std::string out;
  out += op_letter(op.kind);
  out += std::to_string(op.txn);
  if (op.is_data()) {
    out += '[';
    out += op.var;
    out += std::to_string(op.version);
    out += ']';
  }
  return out;
}

std::vector<AnomalyPattern> build_builtin() {
  std::istringstream in(kCatalogData);
  auto catalog = parse_catalog(in);
  // Catalog-wide properties beyond the per-pattern invariants.
  for (const auto& p : catalog) {
    if (p.txn_count() != 2 || p.variables().size() > 2 || p.disallowed.empty()) {
      throw std::logic_error("builtin catalog entry " + p.id + " violates catalog properties");
    }
  }
  if (catalog.size() != 46) throw std::logic_error("builtin catalog must hold 46 patterns");
  return catalog;
}

}  // namespace

char op_letter(OpKind kind) {
  switch (kind) {
    case OpKind::Read: return 'R';
    case OpKind::Write: return 'W';
    case OpKind::Commit: return 'C';
    case OpKind::Abort: return 'A';
  }
  return '?';
}

int AnomalyPattern::txn_count() const {
  int t = 0;
  for (const auto& op : ops) t = std::max(t, op.txn);
  return t;
}

std::vector<std::string> AnomalyPattern::variables() const {
  std::vector<std::string> vars;
  for (const auto& op : ops) {
    if (op.is_data() && std::find(vars.begin(), vars.end(), op.var) == vars.end()) {
      vars.push_back(op.var);
    }
  }
  return vars;
}

AnomalyPattern parse_pattern(std::string_view text) {
  Scanner sc(text);
  if (sc.done()) sc.fail("empty pattern");
  AnomalyPattern p;
  while (!sc.done()) {
    PatternOp op;
    switch (sc.take()) {
      case 'R': op.kind = OpKind::Read; break;
      case 'W': op.kind = OpKind::Write; break;
      case 'C': op.kind = OpKind::Commit; break;
      case 'A': op.kind = OpKind::Abort; break;
      default: sc.fail_at(sc.pos() - 1, "expected one of R, W, C, A");
    }
    op.txn = sc.number();
    if (op.is_data()) {
      sc.expect('[');
      op.var = sc.ident();
      op.version = sc.number();
      sc.expect(']');
    }
    p.ops.push_back(std::move(op));
  }
  validate_pattern(p);
  return p;
}

void validate_pattern(const AnomalyPattern& p) {
  if (p.ops.empty()) throw PatternValidationError("pattern has no operations", 0);
  std::set<int> terminated;
  std::set<int> seen;
  std::map<std::string, int> installed;
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    const auto& op = p.ops[i];
    auto fail = [&](const std::string& why) {
      throw PatternValidationError("op " + std::to_string(i) + " (" + op_text(op) + "): " + why, i);
    };
    if (op.txn < 1) fail("transaction index must be >= 1");
    if (terminated.count(op.txn)) fail("operation after the transaction terminated");
    seen.insert(op.txn);
    if (op.is_terminal()) {
      if (!op.var.empty() || op.version != 0) fail("commit/abort carries no data item");
      terminated.insert(op.txn);
      continue;
    }
    if (op.var.empty()) fail("read/write needs a variable");
    if (op.version < 0) fail("negative version");
    int& top = installed[op.var];
    if (op.kind == OpKind::Write) {
      if (op.version != top + 1) {
        fail("writes must install versions 1, 2, 3, ... in order; expected " + op.var +
             std::to_string(top + 1));
      }
      top = op.version;
    } else if (op.version > top) {
      fail("reads a version that no earlier write installed");
    }
  }
  int expected = 1;
  for (int t : seen) {
    if (t != expected) {
      throw PatternValidationError("transaction indices must be 1..T without gaps", 0);
    }
    ++expected;
  }
  for (int t : seen) {
    if (!terminated.count(t)) {
      throw PatternValidationError(
          "transaction " + std::to_string(t) + " never commits or aborts", p.ops.size() - 1);
    }
  }
}

std::string format_pattern(const AnomalyPattern& p) {
  std::string out;
  for (const auto& op : p.ops) out += op_text(op);
  return out;
}

const std::vector<AnomalyPattern>& builtin_catalog() {
  static const std::vector<AnomalyPattern> catalog = build_builtin();
  return catalog;
}

std::vector<AnomalyPattern> load_builtin_catalog() { return builtin_catalog(); }

const AnomalyPattern* find_pattern(std::span<const AnomalyPattern> catalog, std::string_view id) {
  for (const auto& p : catalog) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

bool is_violation(const AnomalyPattern& pattern, IsolationLevel level) {
  return pattern.disallowed.count(level) != 0;
}

LevelSet parse_level_set(std::string_view text) {
  LevelSet out;
  for (const auto& part : text::split(text, ',')) {
    auto t = text::trim(part);
    if (t.empty()) continue;
    if (text::iequals(t, "ALL")) {
      out.insert(std::begin(kAllLevels), std::end(kAllLevels));
      continue;
    }
    auto level = parse_isolation(t);
    if (!level) throw std::invalid_argument("unknown isolation level '" + std::string(t) + "'");
    out.insert(*level);
  }
  return out;
}

std::string format_level_set(const LevelSet& levels) {
  if (levels.size() == std::size(kAllLevels)) return "ALL";
  std::vector<std::string> parts;
  for (auto l : levels) parts.emplace_back(to_string(l));
  return text::join(parts, ", ");
}

std::vector<AnomalyPattern> parse_catalog(std::istream& in) {
  std::vector<AnomalyPattern> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = text::split(t, '\t');
    if (fields.size() != 3) {
      throw std::invalid_argument("catalog line " + std::to_string(lineno) +
                                  ": expected <id> TAB <pattern> TAB <levels>");
    }
    AnomalyPattern p;
    try {
      p = parse_pattern(fields[1]);
      p.disallowed = parse_level_set(fields[2]);
    } catch (const std::exception& e) {
      throw std::invalid_argument("catalog line " + std::to_string(lineno) + ": " + e.what());
    }
    p.id = std::string(text::trim(fields[0]));
    if (p.id.empty() || p.disallowed.empty()) {
      throw std::invalid_argument("catalog line " + std::to_string(lineno) +
                                  ": id and disallowed levels are required");
    }
    if (find_pattern(out, p.id)) {
      throw std::invalid_argument("catalog line " + std::to_string(lineno) + ": duplicate id " +
                                  p.id);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<AnomalyPattern> load_catalog_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open catalog file " + path);
  return parse_catalog(in);
}

void write_catalog(std::ostream& out, std::span<const AnomalyPattern> catalog) {
  for (const auto& p : catalog) {
    out << p.id << '\t' << format_pattern(p) << '\t' << format_level_set(p.disallowed) << '\n';
  }
}

}  // namespace txpat
