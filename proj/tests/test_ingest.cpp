#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "volmf/ingest.hpp"
#include "volmf/rng.hpp"
#include "volmf/synth.hpp"

using namespace volmf;

namespace {

TickSeries ticks_from(std::initializer_list<std::pair<std::int64_t, double>> list) {
  TickSeries t;
  for (auto [ts, p] : list) t.records.push_back({ts, p, 1.0});
  return t;
}

}  // namespace

TEST(ParseTicks, EmptyInput) {
  EXPECT_TRUE(parse_ticks("").records.empty());
  EXPECT_TRUE(parse_ticks("\n\n").records.empty());
}

TEST(ParseTicks, SingleLine) {
  const auto t = parse_ticks("1315922016,5.8,1.0\n");
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0], (Tick{1315922016, 5.8, 1.0}));
}

TEST(ParseTicks, MalformedFieldReportsLine) {
  try {
    parse_ticks("1315922016,abc,1.0");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  try {
    parse_ticks("1,2,3\n\n1315922016,5.8\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(ParseTicks, NonPositivePriceIsValidationError) {
  EXPECT_THROW(parse_ticks("1,0,1"), ValidationError);
  EXPECT_THROW(parse_ticks("1,-3.5,1"), ValidationError);
}

TEST(ParseTicks, SortsAndRecordsDisorder) {
  const auto t = parse_ticks("30,3,1\n10,1,1\n20,2,1\n10,1.5,1\n");
  ASSERT_EQ(t.records.size(), 4u);
  EXPECT_TRUE(t.input_was_unordered);
  EXPECT_EQ(t.records[0].timestamp, 10);
  EXPECT_EQ(t.records[0].price, 1.0);  // stable: file order kept within a second
  EXPECT_EQ(t.records[1].price, 1.5);
  EXPECT_EQ(t.records[3].timestamp, 30);
  EXPECT_FALSE(parse_ticks("1,1,1\n1,2,1\n").input_was_unordered);
}

TEST(ParseTicks, CountEqualsNonEmptyLines) {
  std::ifstream in(VOLMF_TEST_DATA "/ticks_3day.csv");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::size_t lines = 0;
  std::istringstream ls(text);
  for (std::string l; std::getline(ls, l);) lines += !l.empty();
  EXPECT_EQ(parse_ticks(text).records.size(), lines);
}

TEST(ParseTicks, SerializeRoundTripIsBitIdentical) {
  Rng rng(11);
  TickSeries t;
  for (int i = 0; i < 500; ++i)
    t.records.push_back({1300000000 + i * 7, std::exp(standard_normal(rng)) * 1234.5678,
                         rng.uniform() * 10.0});
  std::ostringstream out;
  write_ticks(out, t);
  const auto back = parse_ticks(out.str());
  ASSERT_EQ(back.records.size(), t.records.size());
  for (std::size_t i = 0; i < t.records.size(); ++i) EXPECT_EQ(back.records[i], t.records[i]);
  std::ostringstream again;
  write_ticks(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(Resample, TwoBarsEachWithItsLastTick) {
  const auto p = resample_last(ticks_from({{0, 10.0}, {90 * 60, 12.0}}), 60);
  EXPECT_EQ(p.prices, (std::vector<double>{10.0, 12.0}));
  EXPECT_EQ(p.fill_flags[0], BarFlag::observed);
  EXPECT_EQ(p.fill_flags[1], BarFlag::observed);
}

TEST(Resample, EmptyMiddleBarIsGapFilled) {
  const auto p = resample_last(ticks_from({{0, 10.0}, {150 * 60, 12.0}}), 60);
  EXPECT_EQ(p.prices, (std::vector<double>{10.0, 10.0, 12.0}));
  EXPECT_EQ(p.fill_flags[1], BarFlag::filled);
  EXPECT_EQ(p.start_time, 0);
  EXPECT_EQ(p.time_of(2), 2 * 3600);
}

TEST(Resample, LeadingBarsBeforeFirstTickDropped) {
  const auto p = resample_last(ticks_from({{5 * 3600 + 10, 7.0}, {6 * 3600 + 5, 8.0}}), 60);
  EXPECT_EQ(p.start_time, 5 * 3600);
  EXPECT_EQ(p.size(), 2u);
}

TEST(Resample, Errors) {
  EXPECT_THROW(resample_last(TickSeries{}, 60), ValidationError);
  EXPECT_THROW(resample_last(ticks_from({{0, 1.0}}), 0), ValidationError);
}

TEST(Resample, DailyBarsOnFixtureMatchBruteForce) {
  std::ifstream in(VOLMF_TEST_DATA "/ticks_3day.csv");
  const auto ticks = parse_ticks(in);
  const auto p = resample_last(ticks, 1440);
  ASSERT_EQ(p.size(), 3u);

  // brute force: scan raw file lines, keep the last price seen in each UTC day
  std::ifstream raw(VOLMF_TEST_DATA "/ticks_3day.csv");
  std::map<std::int64_t, double> last;
  for (std::string line; std::getline(raw, line);) {
    if (line.empty()) continue;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    const long long ts = std::stoll(line.substr(0, c1));
    last[ts / 86400] = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
  }
  ASSERT_EQ(last.size(), 3u);
  std::size_t i = 0;
  for (const auto& [day, price] : last) {
    EXPECT_EQ(p.time_of(i), day * 86400);
    EXPECT_EQ(p.prices[i], price);
    ++i;
  }
  EXPECT_EQ(p.prices[0], 5.79);  // duplicate second: last record wins
}

TEST(LogReturns, Examples) {
  PriceSeries s{1440, 0, {100.0, 100.0}, {BarFlag::observed, BarFlag::observed}};
  EXPECT_EQ(log_returns(s).values, (std::vector<double>{0.0}));

  s.prices = {100.0, 100.0 * std::exp(0.02)};
  EXPECT_NEAR(log_returns(s).values[0], 2.0, 1e-12);

  s.prices = {100.0, 50.0, 100.0};
  s.fill_flags.assign(3, BarFlag::observed);
  const auto r = log_returns(s);
  EXPECT_NEAR(r.values[0], -100.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(r.values[1], 100.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(r.values[0] + r.values[1], 0.0, 1e-12);
  EXPECT_EQ(r.times, (std::vector<std::int64_t>{86400, 2 * 86400}));
}

TEST(LogReturns, NeedsTwoBars) {
  PriceSeries s{1440, 0, {100.0}, {BarFlag::observed}};
  EXPECT_THROW(log_returns(s), ValidationError);
}

TEST(LogReturns, TelescopingSumOnGapFreeTicks) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ticks = synth::random_walk_ticks(2000, 3600, seed, 250.0, 0.02);
    const auto p = resample_last(ticks, 60);
    const auto r = log_returns(p);
    const double sum = std::accumulate(r.values.begin(), r.values.end(), 0.0);
    const double expected = 100.0 * (std::log(ticks.records.back().price) -
                                     std::log(ticks.records.front().price));
    EXPECT_NEAR(sum, expected, 1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST(LogReturns, GapFilledBarsGiveZeroReturns) {
  const auto p = resample_last(ticks_from({{0, 10.0}, {30, 11.0}, {5 * 3600, 12.0}, {9 * 3600, 9.0}}), 60);
  const auto r = log_returns(p);
  for (std::size_t i = 0; i < r.size(); ++i)
    if (r.flags[i] == BarFlag::filled) {
      EXPECT_EQ(r.values[i], 0.0);
    }
  EXPECT_EQ(r.size(), 9u);
}

TEST(FilterOutliers, PositiveOnlyIsTheLiteralRule) {
  ReturnSeries r;
  r.values = {1.0, 45.0, -45.0};
  r.times = {10, 20, 30};
  const auto f = filter_outliers(r, 40.0, OutlierMode::positive_only);
  EXPECT_EQ(f.values, (std::vector<double>{1.0, -45.0}));
  ASSERT_EQ(f.removed_outliers.size(), 1u);
  EXPECT_EQ(f.removed_outliers[0].timestamp, 20);
  EXPECT_EQ(f.removed_outliers[0].value, 45.0);
  EXPECT_EQ(f.times, (std::vector<std::int64_t>{10, 30}));
}

TEST(FilterOutliers, SymmetricAndNoOp) {
  ReturnSeries r;
  r.values = {1.0, 45.0, -45.0};
  EXPECT_EQ(filter_outliers(r, 40.0, OutlierMode::symmetric).values, (std::vector<double>{1.0}));
  r.values = {1.0, 2.0, 3.0};
  EXPECT_EQ(filter_outliers(r, 40.0, OutlierMode::positive_only).values, r.values);
  EXPECT_EQ(filter_outliers(r, 40.0, OutlierMode::symmetric).values, r.values);
  EXPECT_THROW(filter_outliers(r, 0.0), ValidationError);
}

TEST(FilterOutliers, LengthInvariant) {
  const auto ticks = synth::random_walk_ticks(3000, 3600, 3, 100.0, 0.2);
  const auto p = resample_last(ticks, 60);
  const auto f = filter_outliers(log_returns(p), 40.0, OutlierMode::symmetric);
  EXPECT_EQ(f.size(), p.size() - 1 - f.removed_outliers.size());
  EXPECT_FALSE(f.removed_outliers.empty());
  for (double v : f.values) EXPECT_LE(std::abs(v), 40.0);
}

TEST(ReturnsCsv, ReadBackWhatWasWritten) {
  ReturnSeries r;
  r.values = {0.1, -2.5, 1.0 / 3.0};
  r.times = {100, 200, 300};
  r.flags = {BarFlag::observed, BarFlag::filled, BarFlag::observed};
  std::ostringstream out;
  write_csv(out, r);
  std::istringstream in(out.str());
  const auto back = read_returns_csv(in);
  EXPECT_EQ(back.values, r.values);
  EXPECT_EQ(back.times, r.times);
  EXPECT_EQ(back.flags, r.flags);

  std::istringstream single("1.5\n-0.5\n");
  EXPECT_EQ(read_returns_csv(single).values, (std::vector<double>{1.5, -0.5}));
}
