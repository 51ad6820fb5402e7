#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "calibdiag/calibration.hpp"
#include "calibdiag/dgp.hpp"
#include "calibdiag/errors.hpp"

using namespace calibdiag;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Exact monotone L2 projection by enumerating every split into consecutive
// blocks; the optimum is block means, so the best monotone candidate wins.
std::vector<double> brute_force_isotonic(const std::vector<double>& y) {
  const std::size_t n = y.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_fit;
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    std::vector<double> fit(n);
    std::size_t start = 0;
    double prev = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    for (std::size_t i = 0; i < n; ++i) {
      const bool cut = i == n - 1 || (mask >> i) & 1u;
      if (!cut) continue;
      double s = 0.0;
      for (std::size_t j = start; j <= i; ++j) s += y[j];
      const double m = s / static_cast<double>(i - start + 1);
      if (m < prev) monotone = false;
      prev = m;
      for (std::size_t j = start; j <= i; ++j) fit[j] = m;
      start = i + 1;
    }
    if (!monotone) continue;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) sse += (y[i] - fit[i]) * (y[i] - fit[i]);
    if (sse < best) {
      best = sse;
      best_fit = fit;
    }
  }
  return best_fit;
}

}  // namespace

TEST(Isotonic, AlreadyMonotone) {
  const auto m = fit_isotonic(vec({1, 2, 3}), vec({0, 0, 1}));
  EXPECT_EQ(m.knots_y, (std::vector<double>{0, 0, 1}));
}

TEST(Isotonic, OnePoolingStep) {
  const auto m = fit_isotonic(vec({1, 2, 3}), vec({1, 0, 1}));
  EXPECT_EQ(m.knots_y, (std::vector<double>{0.5, 0.5, 1}));
}

TEST(Isotonic, MatchesBruteForceProjection) {
  std::mt19937_64 eng(123);
  std::uniform_real_distribution<double> u;
  std::bernoulli_distribution b(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 8;
    std::vector<double> y(n);
    Vector scores(static_cast<Index>(n)), labels(static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = trial % 2 ? u(eng) : (b(eng) ? 1.0 : 0.0);
      scores[static_cast<Index>(i)] = static_cast<double>(i);
      labels[static_cast<Index>(i)] = y[i];
    }
    const auto fit = fit_isotonic(scores, labels);
    const auto oracle = brute_force_isotonic(y);
    ASSERT_EQ(fit.knots_y.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(fit.knots_y[i], oracle[i], 1e-8);
  }
}

TEST(Isotonic, MeanPreservingAndIdempotent) {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u;
  Vector s(200), l(200);
  for (Index i = 0; i < 200; ++i) {
    s[i] = u(eng);
    l[i] = u(eng) < s[i] ? 1.0 : 0.0;
  }
  const auto m = fit_isotonic(s, l);
  const Vector fitted = apply_isotonic(m, s);
  EXPECT_NEAR(fitted.mean(), l.mean(), 1e-12);
  const auto again = fit_isotonic(s, fitted);
  const Vector refit = apply_isotonic(again, s);
  EXPECT_LT((refit - fitted).cwiseAbs().maxCoeff(), 1e-12);
  for (std::size_t i = 1; i < m.knots_y.size(); ++i) EXPECT_LE(m.knots_y[i - 1], m.knots_y[i]);
}

TEST(Isotonic, TiedScoresArePooled) {
  const auto m = fit_isotonic(vec({1, 1, 2}), vec({0, 1, 1}));
  EXPECT_EQ(m.knots_x, (std::vector<double>{1, 2}));
  EXPECT_EQ(m.knots_y, (std::vector<double>{0.5, 1}));
}

TEST(Isotonic, EmptyInputThrows) { EXPECT_THROW(fit_isotonic(Vector(0), Vector(0)), EmptyInput); }

TEST(ApplyIsotonic, ClampAndInterpolate) {
  IsotonicModel m{{0.0, 1.0}, {0.2, 0.6}};
  EXPECT_DOUBLE_EQ(apply_isotonic(m, -5.0), 0.2);
  EXPECT_DOUBLE_EQ(apply_isotonic(m, 1.0), 0.6);
  EXPECT_NEAR(apply_isotonic(m, 0.5), 0.4, 1e-15);
  double prev = -1.0;
  for (double s = -1.0; s <= 2.0; s += 0.01) {
    const double v = apply_isotonic(m, s);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Platt, PositiveSlopeWhenSeparated) {
  Vector s = Vector::LinSpaced(20, -1, 1);
  Vector l = s.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
  EXPECT_GT(fit_platt(s, l).a, 0.0);
}

TEST(Platt, IndependentLabelsGiveFlatMap) {
  std::mt19937_64 eng(2);
  std::uniform_real_distribution<double> u;
  Vector s(10000), l(10000);
  for (Index i = 0; i < s.size(); ++i) {
    s[i] = u(eng);
    l[i] = u(eng) < 0.5 ? 1.0 : 0.0;
  }
  const auto m = fit_platt(s, l);
  EXPECT_LT(std::abs(m.a), 0.1);
  EXPECT_LT(std::abs(m.b), 0.1);
}

TEST(Platt, ConstantScoreRecoversIntercept) {
  const Vector s = Vector::Constant(8, 0.3);
  const Vector l = vec({1, 1, 1, 0, 1, 1, 1, 0});
  const auto m = fit_platt(s, l);
  EXPECT_NEAR(m.apply(0.3), 0.75, 1e-6);
}

namespace {

LabelLeakResult leak_draw(std::uint64_t seed, double leak) {
  DgpParams params;
  params.n = 2000;
  Engine eng(seed);
  auto s = sample_dgp(params, DriftSpec{}, eng);
  if (leak != 0.0) {
    std::uniform_real_distribution<double> u;
    for (Index i = 0; i < s.g.size(); ++i) {
      const double q = std::clamp(s.p[i] + leak * s.x(i, 0), 0.0, 1.0);
      s.g[i] = u(eng) < q ? 1.0 : 0.0;
    }
  }
  return label_leak_test(s.p, s.x, s.g);
}

}  // namespace

TEST(LabelLeak, SizeUnderNull) {
  int rejections = 0;
  const int reps = 200;
  for (int r = 0; r < reps; ++r) rejections += leak_draw(1000 + static_cast<std::uint64_t>(r), 0.0).p_value < 0.05;
  const double rate = static_cast<double>(rejections) / reps;
  EXPECT_GE(rate, 0.01);
  EXPECT_LE(rate, 0.10);
}

TEST(LabelLeak, PowerUnderLeak) {
  int rejections = 0;
  for (int r = 0; r < 50; ++r) rejections += leak_draw(5000 + static_cast<std::uint64_t>(r), 0.3).p_value < 0.05;
  EXPECT_GT(rejections, 45);
}

TEST(LabelLeak, ZeroColumnDropped) {
  DgpParams params;
  params.n = 500;
  const auto s = sample_dgp(params, DriftSpec{}, 3);
  Matrix x(500, 4);
  x << s.x, Vector::Zero(500);
  const auto r = label_leak_test(s.p, x, s.g);
  EXPECT_EQ(r.df, 3u);
  EXPECT_EQ(r.x_coefficients[3], 0.0);
  EXPECT_GE(r.p_value, 0.0);
  EXPECT_LE(r.p_value, 1.0);
}

TEST(LabelLeak, AffineInvariance) {
  DgpParams params;
  params.n = 800;
  const auto s = sample_dgp(params, DriftSpec{}, 4);
  Matrix x2 = s.x;
  x2.col(0) = 3.0 * x2.col(0).array() + 7.0;
  x2.col(2) = -0.5 * x2.col(2).array() - 1.0;
  EXPECT_NEAR(label_leak_test(s.p, s.x, s.g).p_value, label_leak_test(s.p, x2, s.g).p_value, 1e-6);
}

TEST(LabelLeak, NoColumnsIsDegenerate) {
  EXPECT_THROW(label_leak_test(Vector::Constant(10, 0.5), Matrix(10, 0), Vector::Zero(10)), DegenerateTest);
}
