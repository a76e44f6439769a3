// Copyright (c) 2026 The fluentcrit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Reader and writer for the long ("ooTextFile") TextGrid dialect written by
// Praat and the Montreal Forced Aligner. Only interval tiers are supported.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fluentcrit/error.hpp"

namespace fluentcrit {

struct Interval {
  double xmin = 0.0;
  double xmax = 0.0;
  std::string label;

  friend bool operator==(const Interval&, const Interval&) = default;
};

struct IntervalTier {
  std::string name;
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<Interval> intervals;

  friend bool operator==(const IntervalTier&, const IntervalTier&) = default;
};

struct TierNames {
  std::string phones = "phones";
  std::string words = "words";
};

struct TextGridDoc {
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<IntervalTier> tiers;

  const IntervalTier* find(std::string_view name) const {
    for (const auto& t : tiers)
      if (t.name == name) return &t;
    return nullptr;
  }

  friend bool operator==(const TextGridDoc&, const TextGridDoc&) = default;
};

/// Boundaries closer than this are treated as coincident.
inline constexpr double kBoundaryTolerance = 1e-9;

namespace detail {

struct TgEntry {
  std::string key;    // text left of '=', or the whole line for section markers
  std::string value;  // unescaped when quoted
  bool quoted = false;
  bool marker = false;
  std::size_t line = 0;
};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits the document into key/value statements. Quoted values may span
// lines; a doubled quote inside a string is a literal quote.
inline std::vector<TgEntry> tokenize_textgrid(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  std::vector<TgEntry> entries;
  std::size_t line_no = 1;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    const std::size_t start_line = line_no;
    pos = eol + 1;
    ++line_no;
    const std::string_view trimmed = trim(line);
    if (trimmed.empty()) continue;
    const std::size_t eq = trimmed.find('=');
    if (eq == std::string_view::npos) {
      entries.push_back({std::string(trimmed), {}, false, true, start_line});
      continue;
    }
    TgEntry entry;
    entry.key = std::string(trim(trimmed.substr(0, eq)));
    entry.line = start_line;
    std::string_view rest = trim(trimmed.substr(eq + 1));
    if (!rest.starts_with('"')) {
      entry.value = std::string(rest);
      entries.push_back(std::move(entry));
      continue;
    }
    // Quoted value: scan across lines until the closing quote.
    entry.quoted = true;
    std::string value;
    std::string_view cur = line.substr(static_cast<std::size_t>(rest.data() - line.data()) + 1);
    bool closed = false;
    while (true) {
      std::size_t i = 0;
      while (i < cur.size()) {
        if (cur[i] == '"') {
          if (i + 1 < cur.size() && cur[i + 1] == '"') {
            value.push_back('"');
            i += 2;
            continue;
          }
          closed = true;
          break;
        }
        value.push_back(cur[i]);
        ++i;
      }
      if (closed) {
        if (!trim(cur.substr(i + 1)).empty())
          throw ParseError(line_no - 1, "unexpected text after closing quote");
        break;
      }
      if (pos >= text.size()) throw ParseError(start_line, "unterminated string");
      if (!value.empty() && value.back() == '\r') value.pop_back();
      value.push_back('\n');
      const std::size_t next_eol = std::min(text.find('\n', pos), text.size());
      cur = text.substr(pos, next_eol - pos);
      pos = next_eol + 1;
      ++line_no;
    }
    entry.value = std::move(value);
    entries.push_back(std::move(entry));
  }
  return entries;
}

class TgCursor {
 public:
  explicit TgCursor(std::vector<TgEntry> entries) : entries_(std::move(entries)) {}

  std::size_t last_line() const { return entries_.empty() ? 1 : entries_.back().line; }

  const TgEntry& expect(std::string_view key) {
    while (idx_ < entries_.size() && entries_[idx_].marker) ++idx_;
    if (idx_ >= entries_.size())
      throw ParseError(last_line(), "unexpected end of file, expected '" + std::string(key) + "'");
    const TgEntry& e = entries_[idx_];
    if (e.key != key)
      throw ParseError(e.line, "expected '" + std::string(key) + "', found '" + e.key + "'");
    ++idx_;
    return e;
  }

  std::string expect_string(std::string_view key) {
    const TgEntry& e = expect(key);
    if (!e.quoted) throw ParseError(e.line, "expected a quoted string for '" + e.key + "'");
    return e.value;
  }

  double expect_number(std::string_view key) {
    const TgEntry& e = expect(key);
    return parse_number(e);
  }

  std::size_t expect_count(std::string_view key) {
    const TgEntry& e = expect(key);
    std::size_t n = 0;
    const auto* b = e.value.data();
    const auto* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, n);
    if (ec != std::errc{} || p != end)
      throw ParseError(e.line, "expected a non-negative integer for '" + e.key + "'");
    return n;
  }

  /// Consumes an optional section marker that starts with prefix.
  void skip_marker(std::string_view prefix) {
    if (idx_ < entries_.size() && entries_[idx_].marker && entries_[idx_].key.starts_with(prefix))
      ++idx_;
  }

  bool at_end() {
    while (idx_ < entries_.size() && entries_[idx_].marker) ++idx_;
    return idx_ >= entries_.size();
  }

  std::size_t line() const {
    return idx_ < entries_.size() ? entries_[idx_].line : last_line();
  }

 private:
  static double parse_number(const TgEntry& e) {
    double v = 0.0;
    const auto* b = e.value.data();
    const auto* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc{} || p != end || !std::isfinite(v))
      throw ParseError(e.line, "expected a decimal number for '" + e.key + "', got '" + e.value + "'");
    return v;
  }

  std::vector<TgEntry> entries_;
  std::size_t idx_ = 0;
};

inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

/// Parses a long-format TextGrid and checks that every tier is sorted,
/// gap-free, non-overlapping and inside the document span, and that the
/// required phone and word tiers are present.
inline TextGridDoc parse_textgrid(std::string_view text, const TierNames& required = {}) {
  detail::TgCursor cur(detail::tokenize_textgrid(text));
  if (cur.expect_string("File type") != "ooTextFile")
    throw ParseError(1, "not a long-format TextGrid (File type must be \"ooTextFile\")");
  if (cur.expect_string("Object class") != "TextGrid")
    throw ParseError(cur.line(), "Object class must be \"TextGrid\"");

  TextGridDoc doc;
  doc.xmin = cur.expect_number("xmin");
  doc.xmax = cur.expect_number("xmax");
  if (!(doc.xmin < doc.xmax)) throw ParseError(cur.line(), "document xmin must be < xmax");
  cur.skip_marker("tiers?");
  const std::size_t n_tiers = cur.expect_count("size");
  cur.skip_marker("item []");

  for (std::size_t t = 0; t < n_tiers; ++t) {
    cur.skip_marker("item [");
    const std::size_t tier_line = cur.line();
    const std::string cls = cur.expect_string("class");
    IntervalTier tier;
    tier.name = cur.expect_string("name");
    if (cls != "IntervalTier")
      throw ParseError(tier_line, "tier '" + tier.name + "' has unsupported class " + cls);
    tier.xmin = cur.expect_number("xmin");
    tier.xmax = cur.expect_number("xmax");
    if (tier.xmin < doc.xmin - kBoundaryTolerance || tier.xmax > doc.xmax + kBoundaryTolerance)
      throw ParseError(tier_line, "tier '" + tier.name + "' extends outside the document span");
    const std::size_t n_intervals = cur.expect_count("intervals: size");
    if (n_intervals == 0)
      throw ParseError(tier_line, "tier '" + tier.name + "' has no intervals");
    for (std::size_t i = 0; i < n_intervals; ++i) {
      cur.skip_marker("intervals [");
      const std::size_t line = cur.line();
      Interval iv;
      iv.xmin = cur.expect_number("xmin");
      iv.xmax = cur.expect_number("xmax");
      iv.label = cur.expect_string("text");
      if (!(iv.xmin < iv.xmax))
        throw ParseError(line, "tier '" + tier.name + "': interval with xmin >= xmax");
      if (tier.intervals.empty()) {
        if (std::fabs(iv.xmin - tier.xmin) > kBoundaryTolerance)
          throw ParseError(line, "tier '" + tier.name + "': first interval does not start at tier xmin");
      } else {
        const double prev_end = tier.intervals.back().xmax;
        if (iv.xmin < prev_end - kBoundaryTolerance)
          throw ParseError(line, "tier '" + tier.name + "': overlapping or unsorted intervals");
        if (iv.xmin > prev_end + kBoundaryTolerance)
          throw ParseError(line, "tier '" + tier.name + "': gap between intervals");
      }
      tier.intervals.push_back(std::move(iv));
    }
    if (std::fabs(tier.intervals.back().xmax - tier.xmax) > kBoundaryTolerance)
      throw ParseError(cur.line(), "tier '" + tier.name + "': last interval does not end at tier xmax");
    doc.tiers.push_back(std::move(tier));
  }
  if (!cur.at_end()) throw ParseError(cur.line(), "unexpected content after the last tier");
  for (const auto* name : {&required.phones, &required.words})
    if (doc.find(*name) == nullptr)
      throw ParseError(cur.last_line(), "missing required tier '" + *name + "'");
  return doc;
}

/// Writes the long format. Numbers use the shortest round-trip decimal form,
/// so parse_textgrid(serialize_textgrid(d)) == d.
inline std::string serialize_textgrid(const TextGridDoc& doc) {
  using detail::format_number;
  using detail::quote;
  std::ostringstream out;
  out << "File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n";
  out << "xmin = " << format_number(doc.xmin) << "\n";
  out << "xmax = " << format_number(doc.xmax) << "\n";
  out << "tiers? <exists>\n";
  out << "size = " << doc.tiers.size() << "\n";
  out << "item []:\n";
  for (std::size_t t = 0; t < doc.tiers.size(); ++t) {
    const auto& tier = doc.tiers[t];
    out << "    item [" << t + 1 << "]:\n";
    out << "        class = \"IntervalTier\"\n";
    out << "        name = " << quote(tier.name) << "\n";
    out << "        xmin = " << format_number(tier.xmin) << "\n";
    out << "        xmax = " << format_number(tier.xmax) << "\n";
    out << "        intervals: size = " << tier.intervals.size() << "\n";
    for (std::size_t i = 0; i < tier.intervals.size(); ++i) {
      const auto& iv = tier.intervals[i];
      out << "        intervals [" << i + 1 << "]:\n";
      out << "            xmin = " << format_number(iv.xmin) << "\n";
      out << "            xmax = " << format_number(iv.xmax) << "\n";
      out << "            text = " << quote(iv.label) << "\n";
    }
  }
  return out.str();
}

}  // namespace fluentcrit
