#include "calibdiag/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "calibdiag/errors.hpp"

namespace calibdiag {

namespace {

// Relative reciprocal-condition floor for the unpenalized normal system.
constexpr double kRcondFloor = 1e-13;

struct CenteredDesign {
  Matrix xc;                  // centered non-constant columns
  std::vector<Index> active;  // their indices in the original design
  Vector x_means;             // means of all columns
  double y_mean = 0.0;
  Vector yc;
};

CenteredDesign center(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw InvalidArgument("design rows do not match target length");
  if (y.size() < 1) throw EmptyInput("regression needs at least one row");
  CenteredDesign c;
  const double n = static_cast<double>(x.rows());
  c.x_means = x.colwise().sum().transpose() / n;
  c.y_mean = y.sum() / n;
  c.yc = y.array() - c.y_mean;
  for (Index j = 0; j < x.cols(); ++j) {
    const double spread = (x.col(j).array() - c.x_means[j]).abs().maxCoeff();
    if (spread > 1e-12 * (1.0 + std::abs(c.x_means[j]))) c.active.push_back(j);
  }
  c.xc.resize(x.rows(), static_cast<Index>(c.active.size()));
  for (std::size_t a = 0; a < c.active.size(); ++a) {
    c.xc.col(static_cast<Index>(a)) = x.col(c.active[a]).array() - c.x_means[c.active[a]];
  }
  return c;
}

LinearModel assemble(const CenteredDesign& c, const Vector& beta_active, Index d, double lambda,
                     Basis basis) {
  LinearModel m;
  m.basis = basis;
  m.ridge_lambda = lambda;
  m.coefficients = Vector::Zero(d + 1);
  double intercept = c.y_mean;
  for (std::size_t a = 0; a < c.active.size(); ++a) {
    const Index j = c.active[a];
    m.coefficients[j + 1] = beta_active[static_cast<Index>(a)];
    intercept -= c.x_means[j] * beta_active[static_cast<Index>(a)];
  }
  m.coefficients[0] = intercept;
  return m;
}

double log1p_exp(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Matrix with_intercept(const Matrix& x) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

double logistic_objective(const Matrix& design, const Vector& g, const Vector& beta) {
  const Vector eta = design * beta;
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += g[i] * eta[i] - log1p_exp(eta[i]);
  return ll - 0.5 * kLogisticPenalty * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace

std::string_view to_string(Basis b) {
  switch (b) {
    case Basis::linear: return "linear";
    case Basis::poly2: return "poly2";
  }
  return "unknown";
}

Basis basis_from_string(std::string_view s) {
  if (s == "linear") return Basis::linear;
  if (s == "poly2") return Basis::poly2;
  throw InvalidArgument("unknown basis '" + std::string(s) + "'");
}

Matrix expand_poly2(const Matrix& x) {
  const Index d = x.cols();
  Matrix out(x.rows(), 2 * d + d * (d - 1) / 2);
  out.leftCols(d) = x;
  out.middleCols(d, d) = x.array().square().matrix();
  Index c = 2 * d;
  for (Index i = 0; i < d; ++i) {
    for (Index j = i + 1; j < d; ++j) out.col(c++) = x.col(i).cwiseProduct(x.col(j));
  }
  return out;
}

Matrix expand_basis(const Matrix& x, Basis basis) {
  return basis == Basis::poly2 ? expand_poly2(x) : x;
}

Vector LinearModel::predict(const Matrix& x_basis) const {
  if (x_basis.cols() + 1 != coefficients.size()) {
    throw InvalidArgument("basis dimension does not match the fitted model");
  }
  Vector out = x_basis * coefficients.tail(coefficients.size() - 1);
  out.array() += coefficients[0];
  return out;
}

LinearModel fit_ridge(const Matrix& x_basis, const Vector& y, double lambda, Basis basis) {
  if (!(lambda >= 0.0)) throw InvalidArgument("ridge lambda must be nonnegative");
  const CenteredDesign c = center(x_basis, y);
  const Index a = c.xc.cols();
  Vector beta = Vector::Zero(a);
  if (a > 0) {
    Matrix gram = c.xc.transpose() * c.xc;
    gram.diagonal().array() += lambda;
    const Vector rhs = c.xc.transpose() * c.yc;
    Eigen::LDLT<Matrix> ldlt(gram);
    const Vector pivots = ldlt.vectorD().cwiseAbs();
    const bool ok = ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > kRcondFloor &&
                    pivots.minCoeff() > kRcondFloor * pivots.maxCoeff();
    if (!ok && lambda == 0.0) {
      throw SingularDesign("singular design in unpenalized least squares");
    }
    beta = ldlt.solve(rhs);
  }
  return assemble(c, beta, x_basis.cols(), lambda, basis);
}

std::vector<double> default_lambda_grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}; }

LinearModel fit_ridge_gcv(const Matrix& x_basis, const Vector& y, std::span<const double> grid,
                          Basis basis) {
  if (grid.empty()) throw InvalidArgument("empty lambda grid");
  const CenteredDesign c = center(x_basis, y);
  const Index a = c.xc.cols();
  if (a == 0) return assemble(c, Vector::Zero(0), x_basis.cols(), grid.front(), basis);

  const double n = static_cast<double>(x_basis.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c.xc.transpose() * c.xc);
  const Vector s = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& v = eig.eigenvectors();
  const Vector vtb = v.transpose() * (c.xc.transpose() * c.yc);

  double best_score = std::numeric_limits<double>::infinity();
  double best_lambda = grid.front();
  Vector best_beta = Vector::Zero(a);
  for (double lambda : grid) {
    if (!(lambda > 0.0)) throw InvalidArgument("GCV grid entries must be positive");
    const Vector beta = v * (vtb.array() / (s.array() + lambda)).matrix();
    const double rss = (c.yc - c.xc * beta).squaredNorm();
    const double df = 1.0 + (s.array() / (s.array() + lambda)).sum();
    if (df >= n) continue;
    const double denom = 1.0 - df / n;
    const double score = (rss / n) / (denom * denom);
    if (score < best_score) {
      best_score = score;
      best_lambda = lambda;
      best_beta = beta;
    }
  }
  if (!std::isfinite(best_score)) {
    // Every grid point saturates the degrees of freedom; take the largest penalty.
    best_lambda = *std::max_element(grid.begin(), grid.end());
    best_beta = v * (vtb.array() / (s.array() + best_lambda)).matrix();
  }
  return assemble(c, best_beta, x_basis.cols(), best_lambda, basis);
}

double clip_probability(double p) noexcept {
  return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
}

Vector LogisticModel::predict(const Matrix& x_basis) const {
  if (x_basis.cols() + 1 != coefficients.size()) {
    throw InvalidArgument("basis dimension does not match the fitted model");
  }
  Vector eta = x_basis * coefficients.tail(coefficients.size() - 1);
  eta.array() += coefficients[0];
  return eta.unaryExpr([](double e) { return clip_probability(sigmoid(e)); });
}

LogisticModel fit_logistic(const Matrix& x_basis, const Vector& g, int max_iter, double tol,
                           Basis basis) {
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (x_basis.rows() != g.size()) throw InvalidArgument("design rows do not match label length");
  if (g.size() < 1) throw EmptyInput("logistic regression needs at least one row");
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] != 0.0 && g[i] != 1.0) throw ValidationError(static_cast<std::size_t>(i), "label must be 0 or 1");
  }

  const Matrix design = with_intercept(x_basis);
  const Index p = design.cols();
  Vector penalty = Vector::Constant(p, kLogisticPenalty);
  penalty[0] = 0.0;

  LogisticModel model;
  model.basis = basis;
  model.coefficients = Vector::Zero(p);
  const double g_mean = g.mean();
  if (g_mean > 0.0 && g_mean < 1.0) model.coefficients[0] = std::log(g_mean / (1.0 - g_mean));

  double objective = logistic_objective(design, g, model.coefficients);
  model.objective_path.push_back(objective);

  for (int iter = 1; iter <= max_iter; ++iter) {
    model.iterations = iter;
    const Vector eta = design * model.coefficients;
    Vector mu(eta.size());
    Vector w(eta.size());
    for (Index i = 0; i < eta.size(); ++i) {
      mu[i] = sigmoid(eta[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    const Vector grad = design.transpose() * (g - mu) - penalty.cwiseProduct(model.coefficients);
    Matrix hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += penalty;
    Eigen::LDLT<Matrix> ldlt(hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-300) {
      hess.diagonal().array() += 1e-10;
      ldlt.compute(hess);
    }
    Vector step = ldlt.solve(grad);

    // Halve until the penalized likelihood does not decrease.
    double candidate_obj = objective;
    Vector candidate = model.coefficients;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      candidate = model.coefficients + step;
      candidate_obj = logistic_objective(design, g, candidate);
      if (candidate_obj >= objective) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      model.converged = step.cwiseAbs().maxCoeff() < tol;
      break;
    }
    model.coefficients = candidate;
    objective = candidate_obj;
    model.objective_path.push_back(objective);
    if (step.cwiseAbs().maxCoeff() < tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

LearnerConfig LearnerConfig::ridge_gcv(Basis basis) {
  LearnerConfig c;
  c.basis = basis;
  return c;
}

LearnerConfig LearnerConfig::ridge(double lambda, Basis basis) {
  LearnerConfig c;
  c.basis = basis;
  c.lambda = lambda;
  return c;
}

LearnerConfig LearnerConfig::ols() {
  LearnerConfig c;
  c.basis = Basis::linear;
  c.lambda = 0.0;
  c.singular_fallback = true;
  return c;
}

std::string LearnerConfig::tag() const {
  std::ostringstream os;
  if (lambda && *lambda == 0.0) {
    os << "ols_" << to_string(basis);
  } else if (lambda) {
    os << "ridge_" << to_string(basis) << "_lambda=" << *lambda;
  } else {
    os << "ridge_gcv_" << to_string(basis);
  }
  return os.str();
}

namespace {

LinearModel fit_expanded(const Matrix& x_basis, const Vector& target, const LearnerConfig& cfg) {
  if (!cfg.lambda) return fit_ridge_gcv(x_basis, target, cfg.lambda_grid, cfg.basis);
  try {
    return fit_ridge(x_basis, target, *cfg.lambda, cfg.basis);
  } catch (const SingularDesign&) {
    if (!cfg.singular_fallback) throw;
    return fit_ridge(x_basis, target, kSingularFallbackLambda, cfg.basis);
  }
}

}  // namespace

LinearModel fit_learner(const Matrix& features, const Vector& target, const LearnerConfig& cfg) {
  return fit_expanded(expand_basis(features, cfg.basis), target, cfg);
}

Vector predict_learner(const LinearModel& model, const Matrix& features) {
  return model.predict(expand_basis(features, model.basis));
}

NuisanceFit cross_fit_predict(const Matrix& features, const Vector& target,
                              const FoldAssignment& folds, const LearnerConfig& cfg) {
  const auto n = static_cast<std::size_t>(target.size());
  if (static_cast<std::size_t>(features.rows()) != n || folds.n() != n) {
    throw InvalidArgument("cross_fit_predict: features, target and folds disagree on n");
  }
  const Matrix expanded = expand_basis(features, cfg.basis);
  Vector oof(target.size());
  for (std::size_t j = 0; j < folds.k(); ++j) {
    std::vector<Index> train;
    std::vector<Index> test;
    train.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      (folds.fold_of(i) == static_cast<int>(j) ? test : train).push_back(static_cast<Index>(i));
    }
    LinearModel model;
    try {
      model = fit_expanded(take_rows(expanded, train), take_rows(target, train), cfg);
    } catch (const SingularDesign& e) {
      throw SingularDesign(e.what(), j);
    }
    const Vector pred = model.predict(take_rows(expanded, test));
    for (std::size_t t = 0; t < test.size(); ++t) oof[test[t]] = pred[static_cast<Index>(t)];
  }
  return NuisanceFit{std::move(oof), folds, cfg.tag()};
}

}  // namespace calibdiag
