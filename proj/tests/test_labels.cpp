#include <cmath>

#include <gtest/gtest.h>

#include "repseg/labels.hpp"
#include "test_util.hpp"

using namespace repseg;
using namespace repseg::testing;

TEST(BinaryLabels, Examples) {
  EXPECT_EQ(binary_labels(RepetitionAnnotation({{2, 5}}, 7)), (Eigen::VectorXd(7) << 1, 1, 0, 0, 0, 1, 1).finished());
  EXPECT_EQ(binary_labels(RepetitionAnnotation({}, 4)), Eigen::VectorXd::Ones(4));
  EXPECT_EQ(binary_labels(RepetitionAnnotation({{0, 3}, {3, 6}}, 6)), Eigen::VectorXd::Zero(6));
}

TEST(DensityMap, SingleSegmentSpanningSequence) {
  for (int T : {2, 7, 30, 31}) {
    const auto d = density_map(RepetitionAnnotation({{0, T}}, T));
    EXPECT_NEAR(d.sum(), 1.0, 1e-12);
    Eigen::Index arg = 0;
    d.maxCoeff(&arg);
    EXPECT_EQ(arg, (T - 1) / 2);
    for (Eigen::Index t = 1; t <= arg; ++t) EXPECT_GE(d(t), d(t - 1));
    for (Eigen::Index t = arg + 1; t < T; ++t) EXPECT_LE(d(t), d(t - 1));
  }
}

TEST(DensityMap, FrozenValuesFromScipy) {
  // scipy.stats.norm.pdf over the segment frames, renormalized to unit mass.
  const auto d = density_map(RepetitionAnnotation({{10, 40}}, 60), 1.0 / 6.0);
  EXPECT_NEAR(d(10), 0.0011936766354115223, 1e-15);
  EXPECT_NEAR(d(11), 0.002089736859860927, 1e-15);
  EXPECT_NEAR(d(20), 0.053358759504873045, 1e-15);
  EXPECT_NEAR(d(24), 0.0796019152648705, 1e-15);
  EXPECT_NEAR(d(25), 0.0796019152648705, 1e-15);
  EXPECT_NEAR(d(39), 0.0011936766354115223, 1e-15);
  const Eigen::VectorXd small = density_map(RepetitionAnnotation({{0, 7}}, 7));
  const Eigen::VectorXd expected =
      (Eigen::VectorXd(7) << 0.0125602, 0.07882796, 0.23729608, 0.34263152, 0.23729608, 0.07882796, 0.0125602)
          .finished();
  EXPECT_LE((small - expected).cwiseAbs().maxCoeff(), 5e-9);
}

TEST(DensityMap, ScalarFormulaOracle) {
  // Normal pdf with its constant, summed in long double, then renormalized.
  const int T = 60, s = 10, e = 40;
  const long double mu = (s + e - 1) / 2.0L, sigma = (e - s) / 6.0L;
  const long double pi = 3.141592653589793238462643383279502884L;
  long double mass = 0;
  std::vector<long double> pdf(T, 0.0L);
  for (int t = s; t < e; ++t) {
    pdf[t] = std::exp(-((t - mu) * (t - mu)) / (2 * sigma * sigma)) / (sigma * std::sqrt(2 * pi));
    mass += pdf[t];
  }
  const auto d = density_map(RepetitionAnnotation({{s, e}}, T), 1.0 / 6.0);
  for (int t = 0; t < T; ++t) EXPECT_NEAR(d(t), static_cast<double>(pdf[t] / mass), 1e-10) << t;
}

TEST(DensityMap, TwoSegmentsHaveMassTwo) {
  EXPECT_NEAR(density_map(RepetitionAnnotation({{3, 20}, {25, 31}}, 40)).sum(), 2.0, 1e-6);
  EXPECT_ERROR_CODE(density_map(RepetitionAnnotation({}, 4), 0.0), ErrorCode::InvalidArgument);
}

TEST(CountLabel, Examples) {
  EXPECT_EQ(count_label(RepetitionAnnotation({}, 10)), 0);
  EXPECT_EQ(count_label(RepetitionAnnotation({{0, 5}}, 10)), 1);
  Segments ten;
  for (int k = 0; k < 10; ++k) ten.push_back({10 * k, 10 * k + 8});
  EXPECT_EQ(count_label(RepetitionAnnotation(ten, 100)), 10);
}

TEST(LabelProperties, MassSupportAndPeaks) {
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    const auto ann = random_annotation(rng, uniform_int(rng, 1, 300), 15);
    const auto lb = make_labels(ann, uniform(rng, 0.05, 0.5));
    EXPECT_NEAR(lb.density.sum(), lb.count, 1e-6);
    for (Eigen::Index t = 0; t < lb.density.size(); ++t) {
      ASSERT_GE(lb.density(t), 0.0);
      ASSERT_EQ(lb.density(t) == 0.0, lb.binary(t) == 1.0) << "frame " << t;
    }
    for (const auto& s : ann.segments()) {
      Eigen::Index arg = 0;
      lb.density.segment(s.start, s.length()).maxCoeff(&arg);
      EXPECT_GE(s.start + arg, s.start);
      EXPECT_LT(s.start + arg, s.end);
      EXPECT_LE(std::abs(static_cast<double>(s.start + arg) - s.midpoint()), 0.5);
    }
  }
}

TEST(LabelProperties, ShiftEquivariance) {
  Rng rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = uniform_int(rng, 1, 150);
    const auto ann = random_annotation(rng, T, 8);
    const int k = uniform_int(rng, 0, 40);
    Segments shifted;
    for (const auto& s : ann.segments()) shifted.push_back({s.start + k, s.end + k});
    const auto a = density_map(ann);
    const auto b = density_map(RepetitionAnnotation(shifted, T + k));
    EXPECT_TRUE(b.head(k).isZero(0.0));
    EXPECT_LE((b.tail(T) - a).cwiseAbs().maxCoeff(), 1e-15);
  }
}
