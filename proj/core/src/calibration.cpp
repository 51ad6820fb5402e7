#include "calibdiag/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calibdiag/errors.hpp"
#include "calibdiag/learners.hpp"
#include "calibdiag/stats.hpp"

namespace calibdiag {

IsotonicModel fit_isotonic(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  if (scores.size() == 0) throw EmptyInput("isotonic regression needs at least one point");

  std::vector<Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] < scores[b]; });

  // Pool ties into weighted points.
  IsotonicModel model;
  std::vector<double> value;
  std::vector<double> weight;
  for (Index idx : order) {
    if (!model.knots_x.empty() && scores[idx] == model.knots_x.back()) {
      const double w = weight.back();
      value.back() = (value.back() * w + labels[idx]) / (w + 1.0);
      weight.back() = w + 1.0;
    } else {
      model.knots_x.push_back(scores[idx]);
      value.push_back(labels[idx]);
      weight.push_back(1.0);
    }
  }

  // Blocks on a stack: (mean, weight, number of knots).
  struct Block {
    double mean;
    double weight;
    std::size_t width;
  };
  std::vector<Block> stack;
  stack.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    stack.push_back({value[i], weight[i], 1});
    while (stack.size() > 1 && stack[stack.size() - 2].mean > stack.back().mean) {
      const Block top = stack.back();
      stack.pop_back();
      Block& below = stack.back();
      const double w = below.weight + top.weight;
      below.mean = (below.mean * below.weight + top.mean * top.weight) / w;
      below.weight = w;
      below.width += top.width;
    }
  }
  model.knots_y.reserve(value.size());
  for (const Block& b : stack) model.knots_y.insert(model.knots_y.end(), b.width, b.mean);
  return model;
}

double apply_isotonic(const IsotonicModel& model, double score) {
  const auto& xs = model.knots_x;
  const auto& ys = model.knots_y;
  if (xs.empty()) throw InvalidArgument("empty isotonic model");
  if (score <= xs.front()) return ys.front();
  if (score >= xs.back()) return ys.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), score) - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (score - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

Vector apply_isotonic(const IsotonicModel& model, const Vector& scores) {
  return scores.unaryExpr([&](double s) { return apply_isotonic(model, s); });
}

double PlattModel::apply(double score) const {
  const double eta = a * score + b;
  return clip_probability(1.0 / (1.0 + std::exp(-eta)));
}

Vector PlattModel::apply(const Vector& scores) const {
  return scores.unaryExpr([this](double s) { return apply(s); });
}

PlattModel fit_platt(const Vector& scores, const Vector& labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
  if (scores.size() < 2) throw InvalidArgument("Platt scaling needs at least two points");
  const LogisticModel fit = fit_logistic(Matrix(scores), labels);
  return PlattModel{fit.coefficients[1], fit.coefficients[0]};
}

LabelLeakResult label_leak_test(const Vector& p, const Matrix& x, const Vector& g) {
  const Index n = g.size();
  if (p.size() != n || x.rows() != n) throw InvalidArgument("label_leak_test: inputs differ in length");
  const Index d = x.cols();
  if (d == 0) throw DegenerateTest("no X columns to test");
  if (n <= d + 2) throw InvalidArgument("label_leak_test needs n_L > d_X + 2");

  std::vector<Index> testable;
  for (Index j = 0; j < d; ++j) {
    const double spread = x.col(j).maxCoeff() - x.col(j).minCoeff();
    if (spread > 1e-12 * (1.0 + x.col(j).cwiseAbs().maxCoeff())) testable.push_back(j);
  }
  if (testable.empty()) throw DegenerateTest("every X column is constant");

  const auto k = static_cast<Index>(testable.size());
  Matrix design(n, 2 + k);
  design.col(0).setOnes();
  design.col(1) = p;
  for (Index a = 0; a < k; ++a) design.col(2 + a) = x.col(testable[static_cast<std::size_t>(a)]);

  const RobustOls fit = robust_ols(design, g);
  const Vector beta_x = fit.coefficients.tail(k);
  const Matrix cov_x = fit.covariance.bottomRightCorner(k, k);
  Eigen::LDLT<Matrix> ldlt(cov_x);
  const double wald = beta_x.dot(ldlt.solve(beta_x));

  LabelLeakResult result;
  result.wald_stat = std::max(0.0, wald);
  result.df = static_cast<std::size_t>(k);
  result.p_value = chi_square_upper(result.wald_stat, static_cast<double>(k));
  result.x_coefficients.assign(static_cast<std::size_t>(d), 0.0);
  for (Index a = 0; a < k; ++a) {
    result.x_coefficients[static_cast<std::size_t>(testable[static_cast<std::size_t>(a)])] = beta_x[a];
  }
  return result;
}

}  // namespace calibdiag
