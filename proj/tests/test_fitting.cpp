#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mapgate/fitting.hpp"

using namespace mapgate;

TEST(Fitting, CosineRecoversParameters) {
  std::vector<double> x, y;
  for (int i = 0; i < 60; ++i) {
    x.push_back(1e-9 * 20.0 * i);
    y.push_back(0.5 + 0.45 * std::cos(2.0 * std::numbers::pi * 2.3e6 * x.back() + 0.8));
  }
  const CosineFit f = fit_cosine(x, y);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.frequency, 2.0 * std::numbers::pi * 2.3e6, 1e-6 * f.frequency);
  EXPECT_NEAR(f.phase, 0.8, 1e-6);
  EXPECT_NEAR(f.amplitude, 0.45, 1e-8);
  EXPECT_NEAR(f.offset, 0.5, 1e-8);
  EXPECT_LT(f.residual_rms, 1e-8);
}

TEST(Fitting, CosineWithNoiseReportsResidual) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<double> x, y;
  for (int i = 0; i < 80; ++i) {
    x.push_back(i);
    y.push_back(0.5 + 0.4 * std::cos(0.31 * i - 1.2) + noise(rng));
  }
  const CosineFit f = fit_cosine(x, y);
  EXPECT_NEAR(f.frequency, 0.31, 2e-3);
  EXPECT_NEAR(f.residual_rms, 0.02, 0.006);
}

TEST(Fitting, LineAndUnwrap) {
  std::vector<double> x, wrapped;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i);
    wrapped.push_back(wrap_phase(0.9 * i - 2.0));
  }
  const auto u = unwrap(wrapped);
  const LineFit l = fit_line(x, u);
  EXPECT_NEAR(l.slope, 0.9, 1e-12);
  EXPECT_NEAR(l.intercept, -2.0, 1e-12);
  EXPECT_NEAR(wrap_phase(3.0 * std::numbers::pi), std::numbers::pi, 1e-12);
  EXPECT_NEAR(wrap_phase(-std::numbers::pi), std::numbers::pi, 1e-12);
}

TEST(Fitting, FirstCrossingInterpolates) {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{0.0, -1.0, -3.0, -5.0};
  EXPECT_NEAR(*first_crossing(x, y, 2.0), 1.5, 1e-12);
  EXPECT_FALSE(first_crossing(x, y, 6.0).has_value());
}
