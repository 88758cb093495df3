#pragma once

// Hourly price and load traces: CSV ingestion, validation, serialization and
// the train/test split used by the backtests.
//
// A trace is stored as a start hour plus a dense vector of values, so the
// uniform hourly spacing invariant holds by construction once a file has been
// validated.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "storctl/error.hpp"

namespace storctl {

/// Whole hours since 1970-01-01T00:00 of the trace's own wall clock. No time
/// zone conversion is ever applied; an explicit offset in the input is parsed
/// and ignored.
struct HourStamp {
  std::int64_t hours = 0;

  constexpr auto operator<=>(const HourStamp&) const = default;

  constexpr int hour_of_day() const noexcept {
    const auto h = hours % 24;
    return static_cast<int>(h < 0 ? h + 24 : h);
  }

  constexpr HourStamp operator+(std::int64_t dh) const noexcept { return {hours + dh}; }
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline bool iequals(std::string_view a, std::string_view b) noexcept {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

inline bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size())
    return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i])))
      return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

} // namespace detail

/// Parses `YYYY-MM-DD[T| ]HH[:MM[:SS]]` with an optional `Z` or `±HH[:]MM`
/// suffix. Minutes and seconds must be zero. Throws ParseError.
inline HourStamp parse_timestamp(std::string_view text) {
  const auto s = detail::trim(text);
  auto fail = [&](const char* why) {
    return ParseError("bad timestamp '" + std::string(s) + "': " + why);
  };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!detail::read_digits(s, 0, 4, y) || s.size() < 13 || s[4] != '-' ||
      !detail::read_digits(s, 5, 2, mo) || s[7] != '-' || !detail::read_digits(s, 8, 2, d) ||
      (s[10] != 'T' && s[10] != ' ') || !detail::read_digits(s, 11, 2, h))
    throw fail("expected YYYY-MM-DDTHH");
  std::size_t pos = 13;
  if (pos < s.size() && s[pos] == ':') {
    if (!detail::read_digits(s, pos + 1, 2, mi))
      throw fail("bad minutes");
    pos += 3;
    if (pos < s.size() && s[pos] == ':') {
      if (!detail::read_digits(s, pos + 1, 2, se))
        throw fail("bad seconds");
      pos += 3;
    }
  }
  auto zone = s.substr(pos);
  if (!zone.empty()) {
    int zh = 0, zm = 0;
    const bool ok =
        zone == "Z" ||
        ((zone[0] == '+' || zone[0] == '-') &&
         ((zone.size() == 6 && zone[3] == ':' && detail::read_digits(zone, 1, 2, zh) &&
           detail::read_digits(zone, 4, 2, zm)) ||
          (zone.size() == 5 && detail::read_digits(zone, 1, 2, zh) &&
           detail::read_digits(zone, 3, 2, zm)) ||
          (zone.size() == 3 && detail::read_digits(zone, 1, 2, zh))));
    if (!ok)
      throw fail("unrecognised zone suffix");
  }
  if (h > 23 || mi > 59 || se > 60)
    throw fail("time of day out of range");
  if (mi != 0 || se != 0)
    throw fail("sub-hourly timestamps are not supported");
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok())
    throw fail("invalid calendar date");
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return HourStamp{static_cast<std::int64_t>(days) * 24 + h};
}

inline std::string format_timestamp(HourStamp t) {
  using namespace std::chrono;
  auto days = t.hours / 24;
  auto hod = t.hours % 24;
  if (hod < 0) {
    hod += 24;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hod));
  return buf;
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text) {
  auto s = detail::trim(text);
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError("bad number '" + std::string(text) + "'");
  return v;
}

struct PriceTag {
  static constexpr std::string_view column = "price";
  static void check(double, std::size_t) {}
};

struct LoadTag {
  static constexpr std::string_view column = "demand";
  static void check(double v, std::size_t slot) {
    if (v < 0.0)
      throw ValidationError("negative demand " + format_number(v) + " at slot " +
                            std::to_string(slot));
  }
};

/// A non-empty, gap-free hourly series. Immutable after construction.
template <class Tag>
class HourlySeries {
public:
  using tag_type = Tag;

  HourlySeries(HourStamp start, std::vector<double> values)
      : start_(start), values_(std::move(values)) {
    if (values_.empty())
      throw EmptyTraceError("trace has no samples");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]))
        throw ValidationError("non-finite value at slot " + std::to_string(i));
      Tag::check(values_[i], i);
    }
  }

  HourStamp start() const noexcept { return start_; }
  HourStamp timestamp(std::size_t slot) const noexcept {
    return start_ + static_cast<std::int64_t>(slot);
  }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t slot) const { return values_[slot]; }

  /// `count` slots beginning at `offset`; throws std::out_of_range.
  HourlySeries slice(std::size_t offset, std::size_t count) const {
    if (offset + count > values_.size() || count == 0)
      throw std::out_of_range("trace slice out of range");
    return HourlySeries(timestamp(offset),
                        std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(offset),
                                            values_.begin() +
                                                static_cast<std::ptrdiff_t>(offset + count)));
  }

  double peak() const { return *std::max_element(values_.begin(), values_.end()); }

  bool operator==(const HourlySeries&) const = default;

private:
  HourStamp start_;
  std::vector<double> values_;
};

using PriceTrace = HourlySeries<PriceTag>;
using LoadTrace = HourlySeries<LoadTag>;

template <class Trace>
struct TraceSplit {
  Trace train;
  Trace test;
};

/// First `24 * train_days` slots train, the rest test.
template <class Tag>
TraceSplit<HourlySeries<Tag>> split_train_test(const HourlySeries<Tag>& trace, int train_days) {
  if (train_days <= 0)
    throw InsufficientDataError("training window must cover at least one day");
  const auto n_train = static_cast<std::size_t>(train_days) * 24;
  if (trace.size() < n_train + 1)
    throw InsufficientDataError("trace has " + std::to_string(trace.size()) +
                                " slots; need more than " + std::to_string(n_train) +
                                " for a " + std::to_string(train_days) + "-day training window");
  return {trace.slice(0, n_train), trace.slice(n_train, trace.size() - n_train)};
}

/// Paired traces must share the same hourly grid.
template <class A, class B>
void require_aligned(const HourlySeries<A>& a, const HourlySeries<B>& b) {
  if (a.start() != b.start() || a.size() != b.size())
    throw AlignmentError("traces are not on the same hourly grid (" +
                         format_timestamp(a.start()) + " x" + std::to_string(a.size()) + " vs " +
                         format_timestamp(b.start()) + " x" + std::to_string(b.size()) + ")");
}

/// Reads a `timestamp,<column>` CSV. `source` names the input in messages.
template <class Tag>
HourlySeries<Tag> read_trace(std::istream& in, const std::string& source = "<stream>") {
  std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (text.starts_with("\xEF\xBB\xBF"))
    text.erase(0, 3);

  std::vector<std::pair<HourStamp, double>> rows;
  bool have_header = false;
  std::size_t line_no = 0;
  std::istringstream lines(text);
  std::string raw;
  while (std::getline(lines, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty())
      continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos)
      throw ParseError(source, line_no, "expected exactly two comma-separated fields");
    const auto first = detail::trim(line.substr(0, comma));
    const auto second = detail::trim(line.substr(comma + 1));
    if (!have_header) {
      if (!detail::iequals(first, "timestamp") || !detail::iequals(second, Tag::column))
        throw ParseError(source, line_no,
                         "header must be 'timestamp," + std::string(Tag::column) + "'");
      have_header = true;
      continue;
    }
    try {
      rows.emplace_back(parse_timestamp(first), parse_number(second));
      Tag::check(rows.back().second, rows.size() - 1);
    } catch (const ParseError& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (rows.empty())
    throw EmptyTraceError(source + ": no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<double> values;
  values.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      const auto step = rows[i].first.hours - rows[i - 1].first.hours;
      if (step == 0)
        throw InputError(source + ": duplicate timestamp " + format_timestamp(rows[i].first));
      if (step != 1)
        throw GapError(source + ": missing hour " + format_timestamp(rows[i - 1].first + 1) +
                       " (" + std::to_string(step - 1) + " hour(s) absent)");
    }
    values.push_back(rows[i].second);
  }
  return HourlySeries<Tag>(rows.front().first, std::move(values));
}

template <class Tag>
HourlySeries<Tag> read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open " + path.string());
  return read_trace<Tag>(in, path.string());
}

inline PriceTrace load_price_trace(const std::filesystem::path& path) {
  return read_trace_file<PriceTag>(path);
}

inline LoadTrace load_load_trace(const std::filesystem::path& path) {
  return read_trace_file<LoadTag>(path);
}

template <class Tag>
void write_trace(std::ostream& out, const HourlySeries<Tag>& trace) {
  out << "timestamp," << Tag::column << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i)
    out << format_timestamp(trace.timestamp(i)) << ',' << format_number(trace[i]) << '\n';
}

template <class Tag>
void save_trace(const std::filesystem::path& path, const HourlySeries<Tag>& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot write " + path.string());
  write_trace(out, trace);
}

} // namespace storctl
