#pragma once

// Tick ingestion: parse trade dumps, resample to fixed-period last-price bars,
// build percent log-returns and apply the outlier rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "volmf/error.hpp"
#include "volmf/io.hpp"

namespace volmf {

struct Tick {
  std::int64_t timestamp = 0;  // unix seconds
  double price = 0.0;
  double amount = 0.0;

  friend bool operator==(const Tick&, const Tick&) = default;
};

struct TickSeries {
  std::vector<Tick> records;  // non-decreasing timestamps
  bool input_was_unordered = false;
};

enum class BarFlag { observed, filled };

inline const char* to_string(BarFlag f) noexcept {
  return f == BarFlag::observed ? "observed" : "filled";
}

struct PriceSeries {
  int delta_t_minutes = 0;
  std::int64_t start_time = 0;
  std::vector<double> prices;
  std::vector<BarFlag> fill_flags;

  std::int64_t bar_seconds() const noexcept {
    return static_cast<std::int64_t>(delta_t_minutes) * 60;
  }
  std::int64_t time_of(std::size_t i) const noexcept {
    return start_time + static_cast<std::int64_t>(i) * bar_seconds();
  }
  std::size_t size() const noexcept { return prices.size(); }
};

struct RemovedReturn {
  std::int64_t timestamp = 0;
  double value = 0.0;
};

struct ReturnSeries {
  int delta_t_minutes = 0;
  std::vector<std::int64_t> times;  // start time of the bar closing each return
  std::vector<double> values;       // percent log-returns
  std::vector<BarFlag> flags;       // flag of the closing bar
  std::vector<RemovedReturn> removed_outliers;

  std::size_t size() const noexcept { return values.size(); }
};

enum class OutlierMode { positive_only, symmetric };

inline const char* to_string(OutlierMode m) noexcept {
  return m == OutlierMode::positive_only ? "positive-only" : "symmetric";
}

// Parses headerless `timestamp,price,amount` lines. Blank lines are skipped;
// every other line must parse. The result is stably sorted by timestamp, so
// records sharing a second keep their file order.
inline TickSeries parse_ticks(std::istream& in) {
  TickSeries out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto trimmed = io::trim(line);
    if (trimmed.empty()) continue;
    const auto fields = io::split(trimmed);
    if (fields.size() != 3) throw ParseError(lineno, "expected 3 fields");
    Tick t;
    if (!io::parse_int(fields[0], t.timestamp))
      throw ParseError(lineno, "bad timestamp '" + std::string(fields[0]) + "'");
    if (!io::parse_double(fields[1], t.price))
      throw ParseError(lineno, "bad price '" + std::string(fields[1]) + "'");
    if (!io::parse_double(fields[2], t.amount))
      throw ParseError(lineno, "bad amount '" + std::string(fields[2]) + "'");
    if (!std::isfinite(t.price) || t.price <= 0.0)
      throw ValidationError("line " + std::to_string(lineno) + ": price must be positive");
    if (!std::isfinite(t.amount) || t.amount < 0.0)
      throw ValidationError("line " + std::to_string(lineno) + ": amount must be nonnegative");
    if (!out.records.empty() && t.timestamp < out.records.back().timestamp)
      out.input_was_unordered = true;
    out.records.push_back(t);
  }
  if (out.input_was_unordered) {
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const Tick& a, const Tick& b) { return a.timestamp < b.timestamp; });
  }
  return out;
}

inline TickSeries parse_ticks(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_ticks(in);
}

inline void write_ticks(std::ostream& os, const TickSeries& ticks) {
  for (const auto& t : ticks.records)
    io::write_row(os, {io::fmt(t.timestamp), io::fmt(t.price), io::fmt(t.amount)});
}

// Last-price bars on the epoch-aligned grid [k*dt, (k+1)*dt). The first bar is
// the one holding the first tick; empty bars repeat the previous price.
inline PriceSeries resample_last(const TickSeries& ticks, int delta_t_minutes) {
  if (delta_t_minutes < 1) throw ValidationError("delta_t must be at least 1 minute");
  if (ticks.records.empty()) throw ValidationError("cannot resample an empty tick series");
  PriceSeries out;
  out.delta_t_minutes = delta_t_minutes;
  const std::int64_t width = out.bar_seconds();
  auto bar_index = [width](std::int64_t t) {
    std::int64_t q = t / width;
    if (t % width != 0 && t < 0) --q;
    return q;
  };
  const std::int64_t first = bar_index(ticks.records.front().timestamp);
  const std::int64_t last = bar_index(ticks.records.back().timestamp);
  out.start_time = first * width;
  const auto nbars = static_cast<std::size_t>(last - first + 1);
  out.prices.assign(nbars, 0.0);
  out.fill_flags.assign(nbars, BarFlag::filled);
  for (const auto& t : ticks.records) {
    const auto i = static_cast<std::size_t>(bar_index(t.timestamp) - first);
    out.prices[i] = t.price;
    out.fill_flags[i] = BarFlag::observed;
  }
  for (std::size_t i = 1; i < nbars; ++i)
    if (out.fill_flags[i] == BarFlag::filled) out.prices[i] = out.prices[i - 1];
  return out;
}

inline ReturnSeries log_returns(const PriceSeries& series) {
  if (series.size() < 2) throw ValidationError("log_returns needs at least 2 bars");
  ReturnSeries out;
  out.delta_t_minutes = series.delta_t_minutes;
  const std::size_t n = series.size() - 1;
  out.times.reserve(n);
  out.values.reserve(n);
  out.flags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.times.push_back(series.time_of(i + 1));
    out.values.push_back(100.0 * (std::log(series.prices[i + 1]) - std::log(series.prices[i])));
    out.flags.push_back(series.fill_flags[i + 1]);
  }
  return out;
}

inline ReturnSeries filter_outliers(const ReturnSeries& returns, double threshold,
                                    OutlierMode mode = OutlierMode::positive_only) {
  if (!(threshold > 0.0)) throw ValidationError("outlier threshold must be positive");
  ReturnSeries out;
  out.delta_t_minutes = returns.delta_t_minutes;
  out.removed_outliers = returns.removed_outliers;
  const bool has_flags = returns.flags.size() == returns.values.size();
  const bool has_times = returns.times.size() == returns.values.size();
  for (std::size_t i = 0; i < returns.size(); ++i) {
    const double v = returns.values[i];
    const bool drop = mode == OutlierMode::positive_only ? v > threshold : std::abs(v) > threshold;
    const std::int64_t t = has_times ? returns.times[i] : static_cast<std::int64_t>(i);
    if (drop) {
      out.removed_outliers.push_back({t, v});
      continue;
    }
    out.values.push_back(v);
    if (has_times) out.times.push_back(t);
    if (has_flags) out.flags.push_back(returns.flags[i]);
  }
  return out;
}

// `timestamp,value,flag`
inline void write_csv(std::ostream& os, const PriceSeries& s) {
  io::write_row(os, {"timestamp", "value", "flag"});
  for (std::size_t i = 0; i < s.size(); ++i)
    io::write_row(os, {io::fmt(s.time_of(i)), io::fmt(s.prices[i]), to_string(s.fill_flags[i])});
}

inline void write_csv(std::ostream& os, const ReturnSeries& s) {
  io::write_row(os, {"timestamp", "value", "flag"});
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::int64_t t = i < s.times.size() ? s.times[i] : static_cast<std::int64_t>(i);
    const char* flag = i < s.flags.size() ? to_string(s.flags[i]) : "observed";
    io::write_row(os, {io::fmt(t), io::fmt(s.values[i]), flag});
  }
}

inline nlohmann::json to_json(const ReturnSeries& s) {
  nlohmann::json removed = nlohmann::json::array();
  for (const auto& r : s.removed_outliers) removed.push_back({{"timestamp", r.timestamp}, {"value", r.value}});
  std::size_t filled = 0;
  for (auto f : s.flags) filled += f == BarFlag::filled;
  return {{"delta_t_minutes", s.delta_t_minutes},
          {"count", s.size()},
          {"filled_count", filled},
          {"removed_count", s.removed_outliers.size()},
          {"removed_outliers", removed},
          {"first_time", s.times.empty() ? nlohmann::json() : nlohmann::json(s.times.front())},
          {"last_time", s.times.empty() ? nlohmann::json() : nlohmann::json(s.times.back())}};
}

inline nlohmann::json to_json(const PriceSeries& s) {
  std::size_t filled = 0;
  for (auto f : s.fill_flags) filled += f == BarFlag::filled;
  return {{"delta_t_minutes", s.delta_t_minutes},
          {"start_time", s.start_time},
          {"count", s.size()},
          {"filled_count", filled}};
}

// Reads a return file in any of these layouts, header optional:
//   value | timestamp,value | timestamp,value,flag
// Rows without a timestamp get their zero-based row index.
inline ReturnSeries read_returns_csv(std::istream& in, int delta_t_minutes = 1440) {
  ReturnSeries out;
  out.delta_t_minutes = delta_t_minutes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto trimmed = io::trim(line);
    if (trimmed.empty()) continue;
    const auto f = io::split(trimmed);
    double v = 0.0;
    std::int64_t t = static_cast<std::int64_t>(out.values.size());
    bool ok = false;
    if (f.size() == 1) {
      ok = io::parse_double(f[0], v);
    } else if (f.size() >= 2) {
      ok = io::parse_int(f[0], t) && io::parse_double(f[1], v);
    }
    if (!ok) {
      if (lineno == 1 && out.values.empty()) continue;  // header
      throw ParseError(lineno, "bad return row");
    }
    BarFlag flag = BarFlag::observed;
    if (f.size() >= 3 && f[2] == "filled") flag = BarFlag::filled;
    out.times.push_back(t);
    out.values.push_back(v);
    out.flags.push_back(flag);
  }
  return out;
}

}  // namespace volmf
