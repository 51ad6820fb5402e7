#pragma once

// Regression substrate for every nuisance function: basis expansion, ridge
// with an unpenalized intercept (fixed penalty or GCV-selected), penalized
// logistic regression by IRLS, and K-fold out-of-fold prediction.

#include <span>
#include <string>
#include <string_view>
#include <optional>
#include <vector>

#include "calibdiag/data.hpp"

namespace calibdiag {

enum class Basis { linear, poly2 };

std::string_view to_string(Basis b);
Basis basis_from_string(std::string_view s);

// Originals, then squares, then pairwise products (i < j, lexicographic).
// No intercept column. d = 0 gives an n x 0 matrix.
Matrix expand_poly2(const Matrix& x);
Matrix expand_basis(const Matrix& x, Basis basis);

struct LinearModel {
  Vector coefficients;  // [intercept, slopes...]
  Basis basis = Basis::linear;
  double ridge_lambda = 0.0;

  // x_basis is already expanded; the intercept is added here.
  Vector predict(const Matrix& x_basis) const;
};

// Minimizes ||y - b0 - X b||^2 + lambda ||b||^2. Columns that are constant
// carry no information beyond the intercept and get a zero slope. With
// lambda = 0 a rank-deficient design throws SingularDesign.
LinearModel fit_ridge(const Matrix& x_basis, const Vector& y, double lambda,
                      Basis basis = Basis::linear);

std::vector<double> default_lambda_grid();

// Ridge with lambda chosen by generalized cross-validation over `grid`.
// Ties go to the first grid entry.
LinearModel fit_ridge_gcv(const Matrix& x_basis, const Vector& y, std::span<const double> grid,
                          Basis basis = Basis::linear);

inline constexpr double kLogisticPenalty = 1e-6;
inline constexpr double kProbabilityClip = 1e-6;

double clip_probability(double p) noexcept;

struct LogisticModel {
  Vector coefficients;  // [intercept, slopes...]
  Basis basis = Basis::linear;
  bool converged = false;
  int iterations = 0;
  // Penalized log-likelihood after each accepted step, starting point first.
  std::vector<double> objective_path;

  // Probabilities clipped to [kProbabilityClip, 1 - kProbabilityClip].
  Vector predict(const Matrix& x_basis) const;
};

// IRLS (Newton with step halving) on the log-likelihood minus
// kLogisticPenalty/2 * ||slopes||^2. Stops when the largest coefficient
// change is below tol; non-convergence is reported, not thrown.
LogisticModel fit_logistic(const Matrix& x_basis, const Vector& g, int max_iter = 100,
                           double tol = 1e-8, Basis basis = Basis::linear);

struct LearnerConfig {
  Basis basis = Basis::poly2;
  // Fixed penalty; when empty lambda is chosen by GCV over lambda_grid.
  std::optional<double> lambda;
  std::vector<double> lambda_grid = default_lambda_grid();
  // Retry with lambda = kSingularFallbackLambda when the design is singular.
  bool singular_fallback = false;

  static LearnerConfig ridge_gcv(Basis basis = Basis::poly2);
  static LearnerConfig ridge(double lambda, Basis basis = Basis::poly2);
  // Plain OLS on the linear basis with the 1e-8 ridge fallback.
  static LearnerConfig ols();

  std::string tag() const;
};

inline constexpr double kSingularFallbackLambda = 1e-8;

// Fit on raw features (basis expansion applied here).
LinearModel fit_learner(const Matrix& features, const Vector& target, const LearnerConfig& cfg);
Vector predict_learner(const LinearModel& model, const Matrix& features);

struct NuisanceFit {
  Vector oof_predictions;
  FoldAssignment folds;
  std::string learner_tag;
};

// Row i is predicted by a model trained on every fold except folds.fold_of(i).
// Learner errors are rethrown with the offending fold index attached.
NuisanceFit cross_fit_predict(const Matrix& features, const Vector& target,
                              const FoldAssignment& folds, const LearnerConfig& cfg);

}  // namespace calibdiag
