#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "calibdiag/dgp.hpp"
#include "calibdiag/errors.hpp"
#include "calibdiag/learners.hpp"

using namespace calibdiag;

namespace {

Matrix random_matrix(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> z;
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) m(i, j) = z(eng);
  return m;
}

}  // namespace

TEST(ExpandPoly2, OneColumn) {
  Matrix x(1, 1);
  x << 2;
  Matrix e(1, 2);
  e << 2, 4;
  EXPECT_EQ(expand_poly2(x), e);
}

TEST(ExpandPoly2, TwoColumns) {
  Matrix x(1, 2);
  x << 1, 3;
  Matrix e(1, 5);
  e << 1, 3, 1, 9, 3;
  EXPECT_EQ(expand_poly2(x), e);
}

TEST(ExpandPoly2, EmptyInput) {
  const Matrix e = expand_poly2(Matrix(4, 0));
  EXPECT_EQ(e.rows(), 4);
  EXPECT_EQ(e.cols(), 0);
}

TEST(FitRidge, ConstantColumnGivesInterceptOnly) {
  const Matrix x = Matrix::Zero(3, 1);
  const Vector y = Vector::Constant(3, 3.0);
  const auto m = fit_ridge(x, y, 0.0);
  EXPECT_DOUBLE_EQ(m.coefficients[0], 3.0);
  EXPECT_DOUBLE_EQ(m.coefficients[1], 0.0);
}

TEST(FitRidge, ExactInterpolation) {
  Matrix x(2, 1);
  x << 0, 1;
  Vector y(2);
  y << 0, 1;
  const auto m = fit_ridge(x, y, 0.0);
  EXPECT_NEAR(m.coefficients[0], 0.0, 1e-12);
  EXPECT_NEAR(m.coefficients[1], 1.0, 1e-12);
}

TEST(FitRidge, FullShrinkageLimit) {
  Matrix x(2, 1);
  x << 0, 1;
  Vector y(2);
  y << 0, 1;
  const auto m = fit_ridge(x, y, 1e12);
  EXPECT_NEAR(m.coefficients[1], 0.0, 1e-9);
  EXPECT_NEAR(m.coefficients[0], 0.5, 1e-9);
}

TEST(FitRidge, OlsResidualsOrthogonalToDesign) {
  const Matrix x = random_matrix(200, 4, 1);
  const Vector y = random_matrix(200, 1, 2).col(0) + x.col(0) * 2.0;
  const auto m = fit_ridge(x, y, 0.0);
  const Vector res = y - m.predict(x);
  EXPECT_LT(std::abs(res.sum()), 1e-8 * 200);
  for (Index j = 0; j < x.cols(); ++j) EXPECT_LT(std::abs(res.dot(x.col(j))), 1e-8 * 200);
}

TEST(FitRidge, SingularDesignThrowsWithoutPenalty) {
  Matrix x = random_matrix(50, 2, 3);
  x.col(1) = 2.0 * x.col(0);
  const Vector y = x.col(0);
  EXPECT_THROW(fit_ridge(x, y, 0.0), SingularDesign);
  EXPECT_NO_THROW(fit_ridge(x, y, 1e-3));
}

// Splitting a feature into two identical copies under penalty lambda is the
// same problem as the original feature under penalty lambda / 2.
TEST(FitRidge, DuplicatedColumnMatchesHalvedPenalty) {
  const Matrix x = random_matrix(100, 3, 4);
  const Vector y = random_matrix(100, 1, 5).col(0) + x.col(1);
  Matrix dup(100, 4);
  dup << x, x.col(1);
  const double lambda = 0.7;
  const Vector a = fit_ridge(dup, y, lambda).predict(dup);
  // Penalty lambda/2 on column 1 alone, via rescaling the column by sqrt(2).
  Matrix scaled = x;
  scaled.col(1) *= std::sqrt(2.0);
  const Vector b = fit_ridge(scaled, y, lambda).predict(scaled);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitRidgeGcv, PicksFromGridAndTiesGoFirst) {
  const Matrix x = random_matrix(300, 3, 6);
  const Vector y = x * Vector::Constant(3, 1.0) + 0.1 * random_matrix(300, 1, 7).col(0);
  const auto grid = default_lambda_grid();
  const auto m = fit_ridge_gcv(x, y, grid);
  EXPECT_NE(std::find(grid.begin(), grid.end(), m.ridge_lambda), grid.end());
  // Pure-noise target with a constant design: every lambda ties.
  const auto c = fit_ridge_gcv(Matrix::Zero(10, 2), Vector::LinSpaced(10, 0, 1), grid);
  EXPECT_EQ(c.ridge_lambda, grid.front());
}

TEST(FitLogistic, InterceptOnlyBalanced) {
  Vector g(4);
  g << 0, 1, 0, 1;
  const auto m = fit_logistic(Matrix(4, 0), g);
  EXPECT_NEAR(m.coefficients[0], 0.0, 1e-10);
  EXPECT_TRUE(m.converged);
}

TEST(FitLogistic, InterceptOnlyLogitIdentity) {
  Vector g(4);
  g << 1, 1, 1, 0;
  const auto m = fit_logistic(Matrix(4, 0), g);
  EXPECT_NEAR(m.coefficients[0], std::log(3.0), 1e-8);
}

// Oracle: maximise the penalized log-likelihood by a coarse-to-fine grid search.
TEST(FitLogistic, SeparatedDataMatchesGridSearch) {
  Matrix x(2, 1);
  x << -1, 1;
  Vector g(2);
  g << 0, 1;
  const auto m = fit_logistic(x, g, 500, 1e-10);
  ASSERT_TRUE(m.converged);
  ASSERT_TRUE(std::isfinite(m.coefficients[1]));

  auto objective = [&](double b0, double b1) {
    double ll = 0.0;
    for (Index i = 0; i < 2; ++i) {
      const double eta = b0 + b1 * x(i, 0);
      const double log1pexp = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
      ll += g[i] * eta - log1pexp;
    }
    return ll - 0.5 * kLogisticPenalty * b1 * b1;
  };
  double c0 = 0.0, c1 = 10.0, span0 = 5.0, span1 = 20.0;
  for (int round = 0; round < 40; ++round) {
    double best = -1e300, b0 = c0, b1 = c1;
    for (int i = -20; i <= 20; ++i) {
      for (int j = -20; j <= 20; ++j) {
        const double a = c0 + span0 * i / 20.0;
        const double b = std::max(0.0, c1 + span1 * j / 20.0);
        const double v = objective(a, b);
        if (v > best) {
          best = v;
          b0 = a;
          b1 = b;
        }
      }
    }
    c0 = b0;
    c1 = b1;
    span0 *= 0.5;
    span1 *= 0.5;
  }
  EXPECT_NEAR(m.coefficients[0], c0, 1e-3);
  EXPECT_NEAR(m.coefficients[1], c1, 1e-3 * std::max(1.0, c1));
}

TEST(FitLogistic, ObjectiveNonDecreasing) {
  const Matrix x = random_matrix(300, 3, 8);
  Vector g(300);
  std::mt19937_64 eng(9);
  std::uniform_real_distribution<double> u;
  for (Index i = 0; i < 300; ++i) g[i] = u(eng) < logistic(x(i, 0) - 0.5 * x(i, 2)) ? 1.0 : 0.0;
  const auto m = fit_logistic(x, g);
  ASSERT_GE(m.objective_path.size(), 2u);
  for (std::size_t i = 1; i < m.objective_path.size(); ++i) {
    EXPECT_GE(m.objective_path[i], m.objective_path[i - 1] - 1e-12);
  }
}

TEST(FitLogistic, PredictionsClipped) {
  Matrix x(2, 1);
  x << -100, 100;
  LogisticModel m;
  m.coefficients = Vector(2);
  m.coefficients << 0, 10;
  const Vector p = m.predict(x);
  EXPECT_DOUBLE_EQ(p[0], kProbabilityClip);
  EXPECT_DOUBLE_EQ(p[1], 1.0 - kProbabilityClip);
}

TEST(CrossFit, ConstantTarget) {
  const Matrix x = random_matrix(40, 2, 10);
  const auto folds = make_folds(40, 5, 1);
  const auto fit = cross_fit_predict(x, Vector::Constant(40, 2.5), folds, LearnerConfig::ridge_gcv());
  EXPECT_LT((fit.oof_predictions.array() - 2.5).abs().maxCoeff(), 1e-10);
}

TEST(CrossFit, LeaveOneOutExactModelClass) {
  const Matrix x = random_matrix(30, 2, 11);
  const Vector y = 1.0 + 2.0 * x.col(0).array() - x.col(1).array();
  std::vector<int> loo(30);
  for (int i = 0; i < 30; ++i) loo[static_cast<std::size_t>(i)] = i;
  const FoldAssignment folds(30, loo);
  const auto fit = cross_fit_predict(x, y, folds, LearnerConfig::ridge(0.0, Basis::linear));
  EXPECT_LT((fit.oof_predictions - y).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CrossFit, OwnRowNeverLeaks) {
  const Matrix x = random_matrix(60, 3, 12);
  Vector y = random_matrix(60, 1, 13).col(0);
  const auto folds = make_folds(60, 5, 2);
  const auto cfg = LearnerConfig::ridge(0.5, Basis::poly2);
  const Vector before = cross_fit_predict(x, y, folds, cfg).oof_predictions;
  for (Index i : {Index{0}, Index{17}, Index{59}}) {
    Vector y2 = y;
    y2[i] += 1000.0;
    const Vector after = cross_fit_predict(x, y2, folds, cfg).oof_predictions;
    EXPECT_EQ(after[i], before[i]);
    for (Index j : folds.members(folds.fold_of(static_cast<std::size_t>(i)))) EXPECT_EQ(after[j], before[j]);
  }
}

TEST(CrossFit, SingularFoldReportsIndex) {
  Matrix x(10, 2);
  x.col(0) = Vector::LinSpaced(10, 0, 9);
  x.col(1) = 2.0 * x.col(0);
  const auto folds = make_folds(10, 2, 0);
  LearnerConfig cfg = LearnerConfig::ridge(0.0, Basis::linear);
  try {
    cross_fit_predict(x, x.col(0), folds, cfg);
    FAIL() << "expected SingularDesign";
  } catch (const SingularDesign& e) {
    EXPECT_TRUE(e.fold().has_value());
  }
  EXPECT_NO_THROW(cross_fit_predict(x, x.col(0), folds, LearnerConfig::ols()));
}

TEST(CrossFit, RecoversConditionalVarianceOfScore) {
  DgpParams params;
  params.n = 5000;
  const auto s = sample_dgp(params, DriftSpec{}, 77);
  const auto folds = make_folds(5000, 5, 3);
  const auto fit = cross_fit_predict(s.x, s.p, folds, LearnerConfig::ridge_gcv());
  const double resid = (s.p - fit.oof_predictions).squaredNorm() / 5000.0;
  const double target = params.sigma_u * params.sigma_u * (s.r.array() * (1.0 - s.r.array())).mean();
  EXPECT_NEAR(resid / target, 1.0, 0.10);
}
