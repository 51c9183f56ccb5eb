#pragma once

// Sliding-window engine and the cross-measure join.
//
// Windows are index based: window k covers [k*step, k*step + window). Work
// items may run on several threads but rows always come back in window order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "volmf/error.hpp"
#include "volmf/ingest.hpp"
#include "volmf/io.hpp"

namespace volmf {

struct RollingConfig {
  std::size_t window = 548;
  std::size_t step = 30;
  unsigned threads = 1;  // 0 = hardware concurrency
};

template <typename Result>
struct RollingRow {
  std::size_t first = 0;  // index of the first observation
  std::size_t last = 0;   // one past the last observation
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;
  std::optional<Result> result;
  std::string error;  // set when the estimator threw
};

template <typename Result>
struct RollingTrack {
  std::vector<RollingRow<Result>> rows;
};

inline std::size_t window_count(std::size_t n, std::size_t window, std::size_t step) {
  if (window == 0 || step == 0) throw ValidationError("window and step must be positive");
  if (n < window)
    throw ValidationError("series of length " + std::to_string(n) + " is shorter than the window " +
                          std::to_string(window));
  return (n - window) / step + 1;
}

template <typename Estimator>
auto rolling_apply(const ReturnSeries& series, const RollingConfig& cfg, Estimator&& estimator)
    -> RollingTrack<std::decay_t<std::invoke_result_t<Estimator&, std::span<const double>>>> {
  using Result = std::decay_t<std::invoke_result_t<Estimator&, std::span<const double>>>;
  const std::size_t count = window_count(series.size(), cfg.window, cfg.step);
  const bool has_times = series.times.size() == series.size();

  RollingTrack<Result> track;
  track.rows.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    auto& row = track.rows[k];
    row.first = k * cfg.step;
    row.last = row.first + cfg.window;
    row.window_start = has_times ? series.times[row.first] : static_cast<std::int64_t>(row.first);
    row.window_end = has_times ? series.times[row.last - 1] : static_cast<std::int64_t>(row.last - 1);
  }

  const std::span<const double> values(series.values);
  auto run = [&](std::size_t k) {
    auto& row = track.rows[k];
    try {
      row.result.emplace(estimator(values.subspan(row.first, cfg.window)));
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) run(k);
    return track;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t k; (k = next.fetch_add(1)) < count;) run(k);
    });
  for (auto& th : pool) th.join();
  return track;
}

// Named numeric payload used for track files.
struct Measures {
  std::vector<std::string> names;
  std::vector<double> values;
  std::string status = "ok";
};

// Flat table form of a track: `window_start,window_end,<columns>,status`.
struct TrackTable {
  struct Row {
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
    std::vector<double> values;
    std::string status;
  };
  std::string label;
  std::vector<std::string> columns;
  std::vector<Row> rows;
};

inline TrackTable to_table(const RollingTrack<Measures>& track, std::string label = {}) {
  TrackTable t;
  t.label = std::move(label);
  for (const auto& r : track.rows)
    if (r.result) {
      t.columns = r.result->names;
      break;
    }
  for (const auto& r : track.rows) {
    TrackTable::Row row{r.window_start, r.window_end, {}, {}};
    if (r.result) {
      row.values = r.result->values;
      row.status = r.result->status;
    } else {
      row.values.assign(t.columns.size(), std::nan(""));
      row.status = "failed";
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_csv(std::ostream& os, const TrackTable& t) {
  std::vector<std::string> header{"window_start", "window_end"};
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  header.emplace_back("status");
  io::write_row(os, header);
  for (const auto& r : t.rows) {
    std::vector<std::string> cells{io::fmt(r.window_start), io::fmt(r.window_end)};
    for (double v : r.values) cells.push_back(io::fmt(v));
    cells.push_back(r.status);
    io::write_row(os, cells);
  }
}

inline TrackTable read_track_csv(std::istream& in, std::string label = {}) {
  TrackTable t;
  t.label = std::move(label);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty track file");
  const auto header = io::split(io::trim(line));
  if (header.size() < 3 || header.front() != "window_start" || header[1] != "window_end" ||
      header.back() != "status")
    throw ParseError(1, "track header must be window_start,window_end,...,status");
  for (std::size_t i = 2; i + 1 < header.size(); ++i) t.columns.emplace_back(header[i]);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto trimmed = io::trim(line);
    if (trimmed.empty()) continue;
    const auto f = io::split(trimmed);
    if (f.size() != header.size()) throw ParseError(lineno, "wrong number of fields");
    TrackTable::Row row;
    if (!io::parse_int(f[0], row.window_start) || !io::parse_int(f[1], row.window_end))
      throw ParseError(lineno, "bad window bounds");
    for (std::size_t i = 2; i + 1 < f.size(); ++i) {
      double v = 0.0;
      if (!io::parse_double(f[i], v)) throw ParseError(lineno, "bad value '" + std::string(f[i]) + "'");
      row.values.push_back(v);
    }
    row.status = std::string(f.back());
    t.rows.push_back(std::move(row));
  }
  return t;
}

struct JoinedTable {
  struct Row {
    std::int64_t window_end = 0;
    std::vector<double> values;
    std::string status;  // "ok" only when every source row is ok
  };
  std::vector<std::string> columns;
  std::vector<Row> rows;
  std::vector<std::size_t> dropped;  // unmatched rows per input track
};

// Inner join on window_end. Column names shared by several tracks are
// prefixed with the track label.
inline JoinedTable join_measures(std::span<const TrackTable> tracks) {
  if (tracks.empty()) throw ValidationError("join needs at least one track");
  std::map<std::string, int> name_count;
  for (const auto& t : tracks)
    for (const auto& c : t.columns) ++name_count[c];

  JoinedTable out;
  for (std::size_t i = 0; i < tracks.size(); ++i)
    for (const auto& c : tracks[i].columns) {
      const std::string label = tracks[i].label.empty() ? "t" + std::to_string(i) : tracks[i].label;
      out.columns.push_back(name_count[c] > 1 ? label + "." + c : c);
    }

  std::vector<std::map<std::int64_t, const TrackTable::Row*>> index(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i)
    for (const auto& r : tracks[i].rows) index[i][r.window_end] = &r;

  for (const auto& base : tracks[0].rows) {
    JoinedTable::Row row{base.window_end, {}, "ok"};
    bool matched = true;
    for (std::size_t i = 0; i < tracks.size() && matched; ++i) {
      const auto it = index[i].find(base.window_end);
      if (it == index[i].end()) {
        matched = false;
        break;
      }
      row.values.insert(row.values.end(), it->second->values.begin(), it->second->values.end());
      if (it->second->status != "ok") row.status = "flagged";
    }
    if (matched) out.rows.push_back(std::move(row));
  }
  if (out.rows.empty()) throw ValidationError("tracks share no window_end labels");
  for (const auto& t : tracks) out.dropped.push_back(t.rows.size() - out.rows.size());
  return out;
}

// `window_end,<columns>,status`
inline void write_csv(std::ostream& os, const JoinedTable& j) {
  std::vector<std::string> header{"window_end"};
  header.insert(header.end(), j.columns.begin(), j.columns.end());
  header.emplace_back("status");
  io::write_row(os, header);
  for (const auto& r : j.rows) {
    std::vector<std::string> cells{io::fmt(r.window_end)};
    for (double v : r.values) cells.push_back(io::fmt(v));
    cells.push_back(r.status);
    io::write_row(os, cells);
  }
}

}  // namespace volmf
