#include "calibdiag/stats.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>

#include "calibdiag/errors.hpp"
#include "calibdiag/learners.hpp"

namespace calibdiag {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

double chi_square_upper(double stat, double df) {
  if (!(df > 0.0)) throw InvalidArgument("chi-square needs positive degrees of freedom");
  if (!(stat > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * stat);
}

RobustOls robust_ols(const Matrix& design, const Vector& y) {
  if (design.rows() != y.size()) throw InvalidArgument("design rows do not match outcome length");
  RobustOls fit;
  Matrix gram = design.transpose() * design;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-13) {
    gram.diagonal().tail(gram.rows() - 1).array() += kSingularFallbackLambda;
    ldlt.compute(gram);
    fit.regularized = true;
  }
  fit.coefficients = ldlt.solve(design.transpose() * y);
  fit.residuals = y - design * fit.coefficients;
  const Matrix bread = ldlt.solve(Matrix::Identity(gram.rows(), gram.cols()));
  const Matrix meat = design.transpose() * fit.residuals.array().square().matrix().asDiagonal() * design;
  fit.covariance = bread * meat * bread;
  return fit;
}

}  // namespace calibdiag
