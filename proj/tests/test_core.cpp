#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "pex/core/format.hpp"
#include "pex/core/log.hpp"
#include "pex/core/random.hpp"
#include "pex/core/stats.hpp"
#include "support.hpp"

using namespace pex;
using pex::testing::make_log;

namespace {

LogDataset ten_records() {
  std::vector<std::pair<int, std::vector<double>>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({1 + i % 2, {0.5 * i}});
  return make_log(2, 1, rows);
}

}  // namespace

TEST(ValidateLog, WellFormedLogIsOk) { EXPECT_TRUE(validate_log(ten_records()).ok()); }

TEST(ValidateLog, ZeroPropensityFlaggedAtItsIndex) {
  auto log = ten_records();
  log.records[3].propensity = 0.0;
  auto r = validate_log(log);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].record, 3u);
}

TEST(ValidateLog, ArmBeyondNFlagged) {
  auto log = ten_records();
  log.records[7].arm = 3;
  auto r = validate_log(log);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].record, 7u);
  EXPECT_EQ(r.violations[0].message, "arm out of range");
}

TEST(ValidateLog, ReportsEveryProblem) {
  auto log = ten_records();
  log.records[1].outcomes = {NAN};
  log.records[2].covariates.clear();
  log.records[4].propensity = 1.5;
  EXPECT_EQ(validate_log(log).violations.size(), 3u);
  EXPECT_FALSE(validate_log(log.empty_like(), false).ok());
  EXPECT_TRUE(validate_log(log.empty_like(), true).ok());
}

TEST(ComputeAte, HandExample) {
  auto log = make_log(2, 1, {{1, {1.0}}, {1, {3.0}}, {2, {4.0}}, {2, {6.0}}});
  auto ate = compute_ate(log);
  EXPECT_EQ(ate(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(ate(2, 0), 3.0);
}

TEST(ComputeAte, IdenticalOutcomesGiveZeroMatrix) {
  auto log = make_log(3, 2, {{1, {2, 5}}, {2, {2, 5}}, {3, {2, 5}}, {3, {2, 5}}});
  EXPECT_EQ(compute_ate(log), EffectMatrix(3, 2, 0.0));
}

TEST(ComputeAte, MissingArmThrows) {
  auto log = make_log(3, 1, {{1, {1.0}}, {2, {2.0}}});
  EXPECT_THROW(compute_ate(log), Error);
}

TEST(ComputeAte, ControlRowZeroAndOrderInvariant) {
  std::mt19937_64 eng(11);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::pair<int, std::vector<double>>> rows;
    for (int i = 0; i < 60; ++i) rows.push_back({1 + i % 3, {z(eng), 100 * z(eng)}});
    auto log = make_log(3, 2, rows);
    auto ate = compute_ate(log);
    EXPECT_EQ(ate(1, 0), 0.0);
    EXPECT_EQ(ate(1, 1), 0.0);
    auto shuffled = log;
    std::shuffle(shuffled.records.begin(), shuffled.records.end(), eng);
    auto ate2 = compute_ate(shuffled);
    for (int a = 1; a <= 3; ++a)
      for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(ate(a, j), ate2(a, j), 1e-9 * (1 + std::abs(ate(a, j))));
  }
}

TEST(SplitLog, ExactCountsDisjointUnion) {
  std::vector<std::pair<int, std::vector<double>>> rows;
  for (int i = 0; i < 1000; ++i) rows.push_back({1 + i % 2, {1.0 * i}});
  auto log = make_log(2, 1, rows);
  auto s = split_log(log, 0.05, 9);
  EXPECT_EQ(s.holdout.size(), 50u);
  EXPECT_EQ(s.main.size(), 950u);
  std::set<std::string> ids;
  for (const auto& r : s.main.records) ids.insert(r.unit_id);
  for (const auto& r : s.holdout.records) EXPECT_TRUE(ids.insert(r.unit_id).second);
  EXPECT_EQ(ids.size(), 1000u);

  auto again = split_log(log, 0.05, 9);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(again.holdout.records[i].unit_id, s.holdout.records[i].unit_id);
  EXPECT_TRUE(split_log(log, 0.0, 9).holdout.empty());
  EXPECT_THROW(split_log(log, 1.5, 9), Error);
}

TEST(LogCsv, RoundTripIsExact) {
  auto log = make_log(2, 2, {{1, {0.1, 1e-300}}, {2, {-3.25, 1.0 / 3.0}}});
  std::stringstream ss;
  write_log_csv(ss, log);
  auto back = read_log_csv(ss, 2);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.records[i].outcomes, log.records[i].outcomes);
    EXPECT_EQ(back.records[i].covariates, log.records[i].covariates);
    EXPECT_EQ(back.records[i].arm, log.records[i].arm);
    EXPECT_EQ(back.records[i].propensity, log.records[i].propensity);
  }
}

TEST(LogCsv, MalformedInputThrows) {
  std::stringstream bad("id,arm\n");
  EXPECT_THROW(read_log_csv(bad, 2), Error);
  std::stringstream short_row("unit_id,arm,propensity,x_0,y_0\nu,1,0.5,1\n");
  EXPECT_THROW(read_log_csv(short_row, 2), Error);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.0, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_THROW(parse_double("1.0x"), Error);
  EXPECT_THROW(parse_double(""), Error);
}

TEST(Random, DerivedStreamsDifferAndRepeat) {
  EXPECT_EQ(derive_seed(5, 1), derive_seed(5, 1));
  EXPECT_NE(derive_seed(5, 1), derive_seed(5, 2));
  EXPECT_NE(derive_seed(5, 1), derive_seed(6, 1));
  auto a = make_engine(3, 4), b = make_engine(3, 4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  EXPECT_LT(unit_interval(~0ull), 1.0);
  EXPECT_EQ(unit_interval(0), 0.0);
}

TEST(Stats, QuantileAndRanks) {
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 1.0), 4.0);
  std::vector<double> v{10, 20, 20, 30};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{1, 2.5, 2.5, 4}));
  std::vector<double> a{1, 2, 3, 4}, b{10, 40, 90, 160}, c{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(a, b), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, c), -1.0);
  std::vector<double> k{1, 1, 1, 1};
  EXPECT_TRUE(std::isnan(spearman(a, k)));
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-9);
}

TEST(Stats, RunningStatsMatchesTwoPass) {
  std::vector<double> x{1.5, -2, 7, 3.25, 0};
  RunningStats s;
  for (double v : x) s.add(v);
  double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(s.mean(), mean, 1e-12);
  EXPECT_NEAR(s.variance(), ss / (x.size() - 1), 1e-12);
}
