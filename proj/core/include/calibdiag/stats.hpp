#pragma once

#include <cstddef>

#include "calibdiag/data.hpp"

namespace calibdiag {

double normal_cdf(double z);
// Two-sided normal tail probability P(|Z| >= |z|).
double two_sided_normal_p(double z);
// Upper-tail chi-square probability P(X >= stat) with df degrees of freedom.
double chi_square_upper(double stat, double df);

// OLS with heteroskedasticity-robust (HC0) sandwich covariance. The design
// must already contain its intercept column. A singular design is refit with
// a kSingularFallbackLambda ridge on every column but the first and flagged.
struct RobustOls {
  Vector coefficients;
  Matrix covariance;
  Vector residuals;
  bool regularized = false;
};

RobustOls robust_ols(const Matrix& design, const Vector& y);

}  // namespace calibdiag
