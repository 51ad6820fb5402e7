#pragma once

#include <cstddef>
#include <vector>

#include "calibdiag/data.hpp"

namespace calibdiag {

// Monotone calibration map. One knot per distinct training score.
struct IsotonicModel {
  std::vector<double> knots_x;  // strictly increasing
  std::vector<double> knots_y;  // non-decreasing
};

// Pool-adjacent-violators fit of labels on score rank. Tied scores are pooled
// (averaged, weighted by multiplicity) before PAVA runs. Labels are usually
// 0/1 but any real values are accepted. Throws EmptyInput on empty input.
IsotonicModel fit_isotonic(const Vector& scores, const Vector& labels);

// Linear interpolation between knots, clamped to the end knots outside the
// training range.
double apply_isotonic(const IsotonicModel& model, double score);
Vector apply_isotonic(const IsotonicModel& model, const Vector& scores);

struct PlattModel {
  double a = 0.0;  // slope on the raw score
  double b = 0.0;  // intercept

  double apply(double score) const;
  Vector apply(const Vector& scores) const;
};

// Penalized logistic fit of labels on the raw score.
PlattModel fit_platt(const Vector& scores, const Vector& labels);

struct LabelLeakResult {
  double wald_stat = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  std::vector<double> x_coefficients;
};

// Linear probability regression of g on (1, p, X) with HC0 covariance and a
// Wald chi-square test that every X coefficient is zero. Constant X columns
// cannot be tested: they get coefficient 0 and are dropped from df.
// Throws DegenerateTest when no testable X column remains.
LabelLeakResult label_leak_test(const Vector& p, const Matrix& x, const Vector& g);

}  // namespace calibdiag
