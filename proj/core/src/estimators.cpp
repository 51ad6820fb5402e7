#include "calibdiag/estimators.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "calibdiag/errors.hpp"
#include "calibdiag/stats.hpp"

namespace calibdiag {

namespace {

NuisanceFit injected(const Vector& values, const FoldAssignment& folds, Index n, const char* name) {
  if (values.size() != n) {
    throw InvalidArgument(std::string("injected ") + name + " has the wrong length");
  }
  return NuisanceFit{values, folds, "injected"};
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("threshold must lie strictly inside (0, 1)");
  }
}

// Shared moment for the hard and confident estimators.
TauEstimate hard_moment(const Vector& labels, const Vector& a_hard, const Vector& y,
                        const Vector& m_hat, double threshold, double epsilon, Method method) {
  const double denom = a_hard.squaredNorm() / static_cast<double>(a_hard.size());
  if (!(denom > epsilon)) throw DegenerateThreshold(threshold, "hard residual variance collapsed");
  const Vector signed_label = 2.0 * labels.array() - 1.0;
  const Vector score = signed_label.cwiseProduct(y - m_hat);
  const double tau = mean(score) / (2.0 * denom);
  const Vector psi = score - 2.0 * tau * a_hard.cwiseAbs2();
  const double n = static_cast<double>(y.size());
  const double se = std::sqrt(psi.squaredNorm() / n) / (2.0 * denom * std::sqrt(n));
  return TauEstimate::make(tau, se, static_cast<std::size_t>(y.size()), method);
}

void check_not_constant(const Vector& labels, double threshold) {
  const double s = labels.sum();
  if (s == 0.0) throw DegenerateThreshold(threshold, "every hard label is 0");
  if (s == static_cast<double>(labels.size())) throw DegenerateThreshold(threshold, "every hard label is 1");
}

}  // namespace

Nuisances fit_nuisances(const UnlabelledSet& data, const FoldAssignment& folds,
                        const EstimatorOptions& options) {
  const Index n = data.size();
  if (folds.n() != static_cast<std::size_t>(n)) throw InvalidArgument("folds do not match the data");
  const auto& ov = options.overrides;
  if (ov.r && ov.m) return Nuisances{injected(*ov.r, folds, n, "r"), injected(*ov.m, folds, n, "m")};
  const Matrix x = extract_controls(data);
  NuisanceFit r = ov.r ? injected(*ov.r, folds, n, "r") : cross_fit_predict(x, data.p(), folds, options.learner);
  NuisanceFit m = ov.m ? injected(*ov.m, folds, n, "m") : cross_fit_predict(x, data.y(), folds, options.learner);
  return Nuisances{std::move(r), std::move(m)};
}

double residual_variance(const Vector& p, const Vector& r_hat) {
  if (p.size() != r_hat.size()) throw InvalidArgument("p and r_hat differ in length");
  if (p.size() == 0) return 0.0;
  return (p - r_hat).squaredNorm() / static_cast<double>(p.size());
}

SoftEstimatorDetail soft_estimator(const UnlabelledSet& data, const FoldAssignment& folds,
                                   const EstimatorOptions& options) {
  if (static_cast<std::size_t>(data.size()) < 2 * folds.k()) {
    throw InvalidArgument("soft estimator needs n_U >= 2k");
  }
  return soft_estimator(data, fit_nuisances(data, folds, options), options.epsilon_vstar);
}

SoftEstimatorDetail soft_estimator(const UnlabelledSet& data, const Nuisances& nuisances,
                                   double epsilon_vstar) {
  const Vector& p = data.p();
  const Vector& r_hat = nuisances.r_hat.oof_predictions;
  const Vector& m_hat = nuisances.m_hat.oof_predictions;
  if (r_hat.size() != p.size() || m_hat.size() != p.size()) {
    throw InvalidArgument("nuisance predictions do not match the data");
  }
  const double n = static_cast<double>(p.size());

  const double v_star_hat = residual_variance(p, r_hat);
  if (!(v_star_hat > epsilon_vstar)) throw VStarCollapse(v_star_hat);

  const Vector signed_score = 2.0 * p.array() - 1.0;
  const Vector moment = signed_score.cwiseProduct(data.y() - m_hat);
  const double numerator = mean(moment);
  const double tau = numerator / (2.0 * v_star_hat);
  Vector psi = moment - 2.0 * tau * (p - r_hat).cwiseAbs2();
  const double se = std::sqrt(psi.squaredNorm() / n) / (2.0 * v_star_hat * std::sqrt(n));
  return SoftEstimatorDetail{TauEstimate::make(tau, se, static_cast<std::size_t>(p.size()), Method::soft),
                             v_star_hat,
                             numerator,
                             signed_score.cwiseAbs().sum() / n,
                             std::move(psi),
                             nuisances.r_hat,
                             nuisances.m_hat};
}

Vector hard_labels(const Vector& p, double threshold) {
  return p.unaryExpr([threshold](double v) { return v > threshold ? 1.0 : 0.0; });
}

Vector hard_residuals(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                      const LearnerConfig& hard_learner) {
  check_threshold(threshold);
  const Vector labels = hard_labels(data.p(), threshold);
  check_not_constant(labels, threshold);
  const NuisanceFit fit = cross_fit_predict(extract_controls(data), labels, folds, hard_learner);
  return labels - fit.oof_predictions;
}

TauEstimate hard_estimator(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                           const EstimatorOptions& options) {
  const Vector m_hat = options.overrides.m
                           ? *options.overrides.m
                           : cross_fit_predict(extract_controls(data), data.y(), folds, options.learner)
                                 .oof_predictions;
  return hard_estimator(data, threshold, folds, m_hat, options);
}

TauEstimate hard_estimator(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                           const Vector& m_hat, const EstimatorOptions& options) {
  if (m_hat.size() != data.size()) throw InvalidArgument("m_hat does not match the data");
  const Vector a_hard = hard_residuals(data, threshold, folds, options.hard_learner);
  const Vector labels = hard_labels(data.p(), threshold);
  return hard_moment(labels, a_hard, data.y(), m_hat, threshold, options.epsilon_vstar, Method::hard);
}

Residuals compute_residuals(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                            const Vector& r_hat, const LearnerConfig& hard_learner) {
  if (r_hat.size() != data.size()) throw InvalidArgument("r_hat does not match the data");
  Residuals res;
  res.threshold = threshold;
  res.a_soft = data.p() - r_hat;
  res.a_hard = hard_residuals(data, threshold, folds, hard_learner);
  return res;
}

double kappa_from_residuals(const Residuals& residuals) {
  if (residuals.a_soft.size() != residuals.a_hard.size()) {
    throw InvalidArgument("residual arrays differ in length");
  }
  const double denom = residuals.a_hard.squaredNorm();
  if (!(denom > 0.0)) throw DegenerateThreshold(residuals.threshold, "hard residual is identically zero");
  return residuals.a_hard.dot(residuals.a_soft) / denom;
}

KappaEstimate kappa_hat(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                        const EstimatorOptions& options) {
  const Vector r_hat = options.overrides.r
                           ? *options.overrides.r
                           : cross_fit_predict(extract_controls(data), data.p(), folds, options.learner)
                                 .oof_predictions;
  return kappa_hat(data, threshold, folds, r_hat, options);
}

KappaEstimate kappa_hat(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                        const Vector& r_hat, const EstimatorOptions& options) {
  const Residuals res = compute_residuals(data, threshold, folds, r_hat, options.hard_learner);
  if (!(res.a_hard.squaredNorm() / static_cast<double>(res.a_hard.size()) > options.epsilon_vstar)) {
    throw DegenerateThreshold(threshold, "hard residual variance collapsed");
  }
  return KappaEstimate{threshold, kappa_from_residuals(res), static_cast<std::size_t>(data.size())};
}

ConfidentSubsetResult confident_subset_estimator(const UnlabelledSet& data, double threshold,
                                                 const FoldAssignment& folds,
                                                 const EstimatorOptions& options) {
  return confident_subset_estimator(data, threshold, folds, fit_nuisances(data, folds, options), options);
}

ConfidentSubsetResult confident_subset_estimator(const UnlabelledSet& data, double threshold,
                                                 const FoldAssignment& folds,
                                                 const Nuisances& nuisances,
                                                 const EstimatorOptions& options) {
  check_threshold(threshold);
  const Vector& p = data.p();
  std::vector<Index> members;
  for (Index i = 0; i < p.size(); ++i) {
    if (std::max(p[i], 1.0 - p[i]) > threshold) members.push_back(i);
  }
  if (members.size() < options.confident_floor) {
    throw ConfidentSubsetTooSmall(members.size(), options.confident_floor);
  }

  const Vector p_c = take_rows(p, members);
  const Vector labels = hard_labels(p_c, 0.5);
  check_not_constant(labels, threshold);
  const FoldAssignment folds_c = restrict_folds(folds, members);
  const Matrix x_c = take_rows(extract_controls(data), members);
  const Vector a_hard = labels - cross_fit_predict(x_c, labels, folds_c, options.hard_learner).oof_predictions;
  const Vector m_c = take_rows(nuisances.m_hat.oof_predictions, members);
  const Vector a_soft = p_c - take_rows(nuisances.r_hat.oof_predictions, members);

  ConfidentSubsetResult out;
  out.threshold = threshold;
  out.subset_size = members.size();
  out.tau = hard_moment(labels, a_hard, take_rows(data.y(), members), m_c, threshold,
                        options.epsilon_vstar, Method::confident);
  out.kappa_fm = kappa_from_residuals(Residuals{a_soft, a_hard, threshold});
  return out;
}

TauEstimate supervised_baseline(const LabelledSet& data) {
  const Matrix x = extract_controls(data);
  const Index n = data.size();
  const Index d = x.cols();
  if (n <= d + 2) throw InvalidArgument("supervised baseline needs n_L > d_X + 2");

  const Vector& g = data.g();
  if (g.maxCoeff() == g.minCoeff()) {
    TauEstimate t = TauEstimate::make(0.0, std::numeric_limits<double>::infinity(),
                                      static_cast<std::size_t>(n), Method::supervised);
    t.regularized = true;
    return t;
  }
  Matrix design(n, 2 + d);
  design.col(0).setOnes();
  design.col(1) = g;
  design.rightCols(d) = x;
  const RobustOls fit = robust_ols(design, data.y());
  TauEstimate t = TauEstimate::make(fit.coefficients[1], std::sqrt(std::max(0.0, fit.covariance(1, 1))),
                                    static_cast<std::size_t>(n), Method::supervised);
  t.regularized = fit.regularized;
  return t;
}

SensitivityBound sensitivity_bound(const SoftEstimatorDetail& detail, double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("drift bound delta must be nonnegative");
  if (!(detail.v_star_hat > 0.0)) throw InvalidArgument("sensitivity bound needs V*_hat > 0");
  SensitivityBound b;
  b.delta = delta;
  b.mean_abs_signed_score = detail.mean_abs_signed_score;
  b.bound = std::abs(detail.tau.tau_hat) * delta * detail.mean_abs_signed_score / (2.0 * detail.v_star_hat);
  return b;
}

}  // namespace calibdiag
