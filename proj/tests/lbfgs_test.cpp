#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "picrf/lbfgs.hpp"

namespace picrf {
namespace {

auto ignore = [](const LbfgsIteration&) {};

TEST(Lbfgs, Quadratic) {
  // f(x) = sum_i (i + 1) (x_i - i)^2
  auto f = [](std::span<const double> x, std::span<double> g) {
    double v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - static_cast<double>(i);
      v += (i + 1.0) * d * d;
      g[i] = 2 * (i + 1.0) * d;
    }
    return v;
  };
  std::vector<double> x(10, 5.0);
  LbfgsOptions opt;
  opt.relative_tolerance = 1e-14;
  const auto r = lbfgs_minimize(f, x, opt, ignore);
  EXPECT_NE(r.termination, Termination::LineSearchFailed);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], static_cast<double>(i), 1e-5);
}

TEST(Lbfgs, RosenbrockMonotone) {
  auto f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  std::vector<double> x{-1.2, 1.0};
  LbfgsOptions opt;
  opt.relative_tolerance = 1e-15;
  opt.max_iterations = 200;
  std::vector<double> values;
  const auto r = lbfgs_minimize(f, x, opt, [&](const LbfgsIteration& it) { values.push_back(it.value); });
  EXPECT_NEAR(x[0], 1.0, 1e-4);
  EXPECT_NEAR(x[1], 1.0, 1e-4);
  EXPECT_EQ(values.size(), r.iterations);
  for (std::size_t i = 1; i < values.size(); ++i) EXPECT_LE(values[i], values[i - 1]);
}

TEST(Lbfgs, StopsAtMaxIterations) {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = std::exp(x[0]) - 1e-3;
    return std::exp(x[0]) - 1e-3 * x[0];
  };
  std::vector<double> x{20.0};
  LbfgsOptions opt;
  opt.max_iterations = 3;
  opt.relative_tolerance = 1e-300;
  const auto r = lbfgs_minimize(f, x, opt, ignore);
  EXPECT_EQ(r.termination, Termination::MaxIterations);
  EXPECT_EQ(r.iterations, 3u);
}

TEST(Lbfgs, AlreadyOptimal) {
  auto f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2 * x[0];
    return x[0] * x[0];
  };
  std::vector<double> x{0.0};
  const auto r = lbfgs_minimize(f, x, LbfgsOptions{}, ignore);
  EXPECT_EQ(r.termination, Termination::GradientTolerance);
  EXPECT_EQ(r.iterations, 0u);
}

TEST(Lbfgs, CubicStepStaysInBracket) {
  for (double a : {0.0, 1.0}) {
    const double b = 1 - a;
    const double x = detail::cubic_step(a, 1.0, -1.0, b, 2.0, 3.0);
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

}  // namespace
}  // namespace picrf
