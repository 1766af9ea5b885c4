#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "typei/error.hpp"
#include "typei/metrics.hpp"

using namespace typei;

namespace {

StyleVector style(Eigen::Index rows, Eigen::Index cols, double fill) {
  return StyleVector{RowMatrix::Constant(rows, cols, fill)};
}

AttackResult result(double in, double out, bool success, std::optional<double> dev = std::nullopt) {
  AttackResult r;
  r.mode = dev ? AttackMode::style_space : AttackMode::image_space;
  r.input_distance = in;
  r.output_distance = out;
  r.success = success;
  r.deviation = dev;
  r.iterations_used = 3;
  return r;
}

}  // namespace

TEST(Rmsd, MetricAxiomsOnRandomTriples) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(37), b(37), c(37);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = u(rng), b[i] = u(rng), c[i] = u(rng);
    EXPECT_EQ(rmsd(a, a), 0.0);
    EXPECT_GT(rmsd(a, b), 0.0);
    EXPECT_EQ(rmsd(a, b), rmsd(b, a));
    EXPECT_LE(rmsd(a, c), rmsd(a, b) + rmsd(b, c) + 1e-15);
  }
}

TEST(Rmsd, KnownValueAndShapeCheck) {
  Image a({1, 2, 2}, 0.0), b({1, 2, 2}, 0.5);
  EXPECT_DOUBLE_EQ(rmsd(a, b), 0.5);
  EXPECT_THROW(rmsd(a, Image({1, 1, 4})), InvalidInput);
}

TEST(Deviation, DoublingGivesHundredOverRootN) {
  for (Eigen::Index rows : {1, 2, 4, 5}) {
    for (Eigen::Index cols : {1, 3, 5, 20}) {
      const auto w_ori = style(rows, cols, 0.37);
      StyleVector w{w_ori.rows * 2.0};
      const double n = static_cast<double>(rows * cols);
      EXPECT_EQ(deviation(w, w_ori), 100.0 / std::sqrt(n)) << rows << "x" << cols;
    }
  }
}

TEST(Deviation, WorkedValues) {
  EXPECT_DOUBLE_EQ(deviation(style(1, 4, 2.0), style(1, 4, 1.0)), 50.0);
  EXPECT_DOUBLE_EQ(deviation(style(4, 25, -2.0), style(4, 25, -1.0)), 10.0);
  EXPECT_EQ(deviation(style(2, 3, 1.5), style(2, 3, 1.5)), 0.0);
}

TEST(Deviation, DegenerateReferenceIsRejected) {
  auto w_ori = style(1, 3, 1.0);
  w_ori.rows(0, 1) = 0.0;
  EXPECT_THROW(deviation(style(1, 3, 1.0), w_ori), DegenerateReference);
  EXPECT_THROW(deviation(style(1, 3, 1.0), style(1, 4, 1.0)), InvalidInput);
}

TEST(DimensionChangeRates, PerRowRelativeChange) {
  StyleVector w_ori{RowMatrix::Ones(3, 4)};
  StyleVector w = w_ori;
  w.rows.row(1) *= 3.0;  // +200%
  w.rows(2, 0) = 0.0;    // one of four entries drops by 1 -> 1/2 of ||row|| = 2
  const auto rates = dimension_change_rates(w, w_ori);
  ASSERT_EQ(rates.size(), 3u);
  EXPECT_EQ(rates[0], 0.0);
  EXPECT_DOUBLE_EQ(rates[1], 200.0);
  EXPECT_DOUBLE_EQ(rates[2], 50.0);
}

TEST(Aggregate, MeansAndRate) {
  std::vector<AttackResult> rs{result(0.5, 0.05, true), result(0.1, 0.2, false), result(0.6, 0.08, true)};
  const auto s = aggregate(rs, "mnist", AttackMode::image_space);
  EXPECT_EQ(s.num_samples, 3u);
  EXPECT_DOUBLE_EQ(s.mean_input_distance, (0.5 + 0.1 + 0.6) / 3);
  EXPECT_DOUBLE_EQ(s.mean_output_distance, (0.05 + 0.2 + 0.08) / 3);
  EXPECT_DOUBLE_EQ(s.success_rate, 2.0 / 3);
  EXPECT_FALSE(s.mean_dev.has_value());
  ASSERT_EQ(s.per_sample_records.size(), 3u);
  EXPECT_EQ(s.per_sample_records[2].index, 2u);

  const auto only = aggregate(rs, "mnist", AttackMode::image_space, true);
  EXPECT_DOUBLE_EQ(only.mean_input_distance, 0.55);
  EXPECT_DOUBLE_EQ(only.success_rate, 2.0 / 3);
}

TEST(Aggregate, StyleModeCarriesDev) {
  std::vector<AttackResult> rs{result(1.0, 0.05, true, 10.0), result(1.1, 0.07, true, 30.0)};
  const auto s = aggregate(rs, "style-generator", AttackMode::style_space);
  ASSERT_TRUE(s.mean_dev.has_value());
  EXPECT_DOUBLE_EQ(*s.mean_dev, 20.0);
}

TEST(Aggregate, RejectsEmptyAndMixedModes) {
  EXPECT_THROW(aggregate(std::vector<AttackResult>{}, "mnist", AttackMode::image_space), InvalidInput);
  std::vector<AttackResult> mixed{result(0.5, 0.05, true), result(1.0, 0.05, true, 3.0)};
  EXPECT_THROW(aggregate(mixed, "mnist", AttackMode::image_space), InvalidInput);
}
