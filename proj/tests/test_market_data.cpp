#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "spotvol/market_data.hpp"
#include "support.hpp"

using namespace spotvol;

namespace {

ObservationSet parse(const std::string& text, PriceKind kind = PriceKind::log) {
  std::istringstream in(text);
  return parse_ticks_csv(in, kind);
}

std::string error_of(const std::string& text, PriceKind kind = PriceKind::log) {
  try {
    parse(text, kind);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(LoadCsv, RawPricesAreLoggedAndTimesNormalized) {
  std::ostringstream text;
  text.precision(17);
  text << "asset,time,price\nA,10," << std::exp(0.0) << "\nA,20," << std::exp(1.0) << "\nA,30," << std::exp(1.0)
       << "\n";
  const auto obs = parse(text.str(), PriceKind::raw);
  ASSERT_EQ(obs.d(), 1u);
  EXPECT_EQ(obs.series[0].times, (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_NEAR(obs.series[0].values[0], 0.0, 1e-15);
  EXPECT_NEAR(obs.series[0].values[1], 1.0, 1e-15);
  EXPECT_NEAR(obs.series[0].values[2], 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(obs.time_span, 20.0);
  EXPECT_DOUBLE_EQ(obs.time_origin, 10.0);
}

TEST(LoadCsv, GlobalSpanAcrossAssets) {
  const auto obs = parse("asset,time,price\nB,0,1\nA,50,1\nB,100,2\nA,70,3\n");
  ASSERT_EQ(obs.d(), 2u);
  EXPECT_EQ(obs.series[0].asset_id, "B");
  EXPECT_EQ(obs.series[1].asset_id, "A");
  EXPECT_DOUBLE_EQ(obs.series[1].times[0], 0.5);
  EXPECT_DOUBLE_EQ(obs.series[1].times[1], 0.7);
  // A does not reach the global endpoints; kept interior.
  EXPECT_GT(obs.series[1].times.front(), 0.0);
  EXPECT_LT(obs.series[1].times.back(), 1.0);
}

TEST(LoadCsv, DuplicateTimestampNamesAssetAndTime) {
  const auto msg = error_of("asset,time,price\nA,5,1\nA,5,2\nA,7,3\n");
  EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'A'"), std::string::npos) << msg;
  EXPECT_NE(msg.find(" 5 "), std::string::npos) << msg;
}

TEST(LoadCsv, Rejections) {
  EXPECT_NE(error_of("asset,time,price\nA,1,0\nA,2,1\n", PriceKind::raw).find("non-positive"), std::string::npos);
  EXPECT_NE(error_of("asset,time,price\nA,1,-1\nA,2,1\n", PriceKind::raw).find("non-positive"), std::string::npos);
  EXPECT_NE(error_of("asset,time,price\nA,1,1\nA,2,1\nB,1.5,1\n").find("fewer than 2"), std::string::npos);
  EXPECT_NE(error_of("asset,time,price\nA,2,1\nA,1,1\n").find("out of order"), std::string::npos);
  EXPECT_NE(error_of("a,b,c\nA,1,1\n").find("header"), std::string::npos);
  EXPECT_NE(error_of("asset,time,price\nA,x,1\nA,2,1\n").find("cannot parse"), std::string::npos);
  EXPECT_NE(error_of("asset,time,price\nA,1\n").find("3 fields"), std::string::npos);
  EXPECT_NE(error_of("").find("empty"), std::string::npos);
}

TEST(LoadCsv, NegativeLogPricesAreFine) {
  const auto obs = parse("asset,time,price\nA,0,-1.5\nA,1,-1.0\n");
  EXPECT_DOUBLE_EQ(obs.series[0].values[0], -1.5);
}

TEST(LoadCsv, FromFileAndMissingFile) {
  const std::string path = ::testing::TempDir() + "spotvol_ticks.csv";
  {
    std::ofstream out(path);
    out << "asset,time,price\r\nA,0,1\r\nA,1,2\r\n";
  }
  const auto obs = load_csv(path, PriceKind::log);
  EXPECT_EQ(obs.series[0].values, (std::vector<double>{1.0, 2.0}));
  std::remove(path.c_str());
  EXPECT_THROW(load_csv(path, PriceKind::log), Error);
}

TEST(LoadCsv, WriteThenParseRecoversValues) {
  test::Rng rng(11);
  ObservationSet obs;
  for (int j = 0; j < 3; ++j) {
    const auto a = test::random_asset(rng, 20);
    TickSeries s{"X" + std::to_string(j), {0.0}, {0.0}};
    for (std::size_t l = 0; l < a.size(); ++l) {
      s.times.push_back(a.times[l]);
      s.values.push_back(s.values.back() + a.deltas[l]);
    }
    s.times.back() = 1.0;
    obs.series.push_back(s);
  }
  std::stringstream buf;
  write_ticks_csv(buf, obs);
  const auto back = parse_ticks_csv(buf, PriceKind::log);
  ASSERT_EQ(back.d(), obs.d());
  for (std::size_t j = 0; j < obs.d(); ++j) {
    EXPECT_EQ(back.series[j].times, obs.series[j].times);
    EXPECT_EQ(back.series[j].values, obs.series[j].values);
  }
}

TEST(Increments, Examples) {
  ObservationSet obs{{TickSeries{"A", {0.0, 0.5, 1.0}, {0.0, 1.0, 1.0}},
                      TickSeries{"B", {0.0, 0.2, 0.4, 1.0}, {2.0, 2.0, 2.0, 2.0}},
                      TickSeries{"C", {0.0, 0.3, 1.0}, {0.0, 0.3, 0.1}}},
                     1.0, 0.0};
  const auto inc = increments(obs);
  EXPECT_EQ(inc[0].deltas, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(inc[0].times, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(inc[1].deltas, (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_DOUBLE_EQ(inc[2].deltas[0], 0.3);
  EXPECT_DOUBLE_EQ(inc[2].deltas[1], 0.1 - 0.3);
  EXPECT_NEAR(inc[2].deltas[0] + inc[2].deltas[1], 0.1, 1e-15);
  EXPECT_EQ(min_increment_count(inc), 2u);
}

TEST(Increments, RejectsInvalidSets) {
  ObservationSet dup{{TickSeries{"A", {0.0, 1.0}, {0, 0}}, TickSeries{"A", {0.0, 1.0}, {0, 0}}}, 1.0, 0.0};
  EXPECT_THROW(increments(dup), Error);
  ObservationSet outside{{TickSeries{"A", {0.0, 2.0}, {0, 0}}}, 1.0, 0.0};
  EXPECT_THROW(increments(outside), Error);
  ObservationSet nan{{TickSeries{"A", {0.0, 1.0}, {0, std::nan("")}}}, 1.0, 0.0};
  EXPECT_THROW(increments(nan), Error);
  EXPECT_THROW(increments(ObservationSet{}), Error);
}

TEST(MarketDataProperties, NormalizationIdempotentOrderPreservingTelescoping) {
  test::Rng rng(5);
  std::uniform_real_distribution<double> raw_time(-50.0, 250.0);
  std::normal_distribution<double> step(0.0, 0.01);
  for (int trial = 0; trial < 50; ++trial) {
    ObservationSet obs;
    for (int j = 0; j < 4; ++j) {
      std::set<double> ts;
      while (ts.size() < 30) ts.insert(raw_time(rng));
      TickSeries s{"S" + std::to_string(j), {ts.begin(), ts.end()}, {}};
      double x = 100.0 * step(rng);
      for (std::size_t l = 0; l < s.times.size(); ++l) s.values.push_back(x += step(rng));
      obs.series.push_back(s);
    }
    const auto once = normalize_times(obs);
    const auto twice = normalize_times(once);
    for (std::size_t j = 0; j < obs.d(); ++j) {
      EXPECT_EQ(once.series[j].times, twice.series[j].times);
      for (std::size_t l = 1; l < once.series[j].times.size(); ++l)
        EXPECT_LT(once.series[j].times[l - 1], once.series[j].times[l]);
    }
    EXPECT_EQ(once.time_span, twice.time_span);
    EXPECT_EQ(once.time_origin, twice.time_origin);

    const auto inc = increments(once);
    for (std::size_t j = 0; j < obs.d(); ++j) {
      const auto& v = once.series[j].values;
      double sum = v.front();
      double scale = 0.0;
      for (double x : v) scale = std::max(scale, std::abs(x));
      for (double dx : inc[j].deltas) sum += dx;
      EXPECT_NEAR(sum, v.back(), 1e-12 * scale);
    }
  }
}
