#pragma once

// Estimators of the partial-association coefficient tau from a calibrated
// score, and the quantities the diagnostic reads off them.
//
// Notation used in comments: r(X) = E[p | X], m(X) = E[Y | X],
// a_soft = p - r(X), G~ = 1{p > t}, a_hard = G~ - E[G~ | X], and
// V* = E[a_soft^2]. Hats denote cross-fitted (or injected) estimates.

#include <cstddef>
#include <optional>

#include "calibdiag/data.hpp"
#include "calibdiag/learners.hpp"

namespace calibdiag {

// Below this residual score variance the soft moment is treated as collapsed.
inline constexpr double kEpsilonVStar = 1e-6;
inline constexpr std::size_t kConfidentSubsetFloor = 20;

// Known nuisance values that replace the cross-fitted ones, e.g. the true
// r(X) and m(X) of a simulation.
struct NuisanceOverrides {
  std::optional<Vector> r;
  std::optional<Vector> m;
};

struct EstimatorOptions {
  // Learner for r_hat (p on X) and m_hat (Y on X).
  LearnerConfig learner = LearnerConfig::ridge_gcv();
  // Learner residualising the hard label on X.
  LearnerConfig hard_learner = LearnerConfig::ols();
  double epsilon_vstar = kEpsilonVStar;
  std::size_t confident_floor = kConfidentSubsetFloor;
  NuisanceOverrides overrides;
};

struct Nuisances {
  NuisanceFit r_hat;
  NuisanceFit m_hat;
};

Nuisances fit_nuisances(const UnlabelledSet& data, const FoldAssignment& folds,
                        const EstimatorOptions& options = {});

// Mean of (p - r_hat)^2 with divisor n.
double residual_variance(const Vector& p, const Vector& r_hat);

struct SoftEstimatorDetail {
  TauEstimate tau;
  double v_star_hat = 0.0;
  double numerator = 0.0;             // E_n[(2p - 1)(Y - m_hat)]
  double mean_abs_signed_score = 0.0; // E_n|2p - 1|
  Vector psi;                         // influence values at tau_hat
  NuisanceFit r_hat;
  NuisanceFit m_hat;
};

// tau_hat = E_n[(2p-1)(Y-m_hat)] / (2 V*_hat) with sandwich standard error
// sqrt(E_n[psi^2]) / (2 V*_hat sqrt(n)), psi = (2p-1)(Y-m_hat) - 2 tau_hat a_soft^2.
// Throws VStarCollapse when V*_hat <= epsilon_vstar.
SoftEstimatorDetail soft_estimator(const UnlabelledSet& data, const FoldAssignment& folds,
                                   const EstimatorOptions& options = {});
SoftEstimatorDetail soft_estimator(const UnlabelledSet& data, const Nuisances& nuisances,
                                   double epsilon_vstar = kEpsilonVStar);

// 1{p > threshold}; ties at the threshold map to 0.
Vector hard_labels(const Vector& p, double threshold);

// a_hard for one threshold, residualised on X by cross-fitting `hard_learner`.
// Throws DegenerateThreshold if every label is 0 or every label is 1.
Vector hard_residuals(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                      const LearnerConfig& hard_learner = LearnerConfig::ols());

// Soft moment with G~ in place of p; se from the psi analogue
// (2G~-1)(Y-m_hat) - 2 tau_hat a_hard^2.
TauEstimate hard_estimator(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                           const EstimatorOptions& options = {});
TauEstimate hard_estimator(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                           const Vector& m_hat, const EstimatorOptions& options = {});

struct KappaEstimate {
  double threshold = 0.5;
  double kappa_hat = 0.0;
  std::size_t n_effective = 0;
};

Residuals compute_residuals(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                            const Vector& r_hat, const LearnerConfig& hard_learner = LearnerConfig::ols());

// E_n[a_hard a_soft] / E_n[a_hard^2].
double kappa_from_residuals(const Residuals& residuals);

KappaEstimate kappa_hat(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                        const EstimatorOptions& options = {});
KappaEstimate kappa_hat(const UnlabelledSet& data, double threshold, const FoldAssignment& folds,
                        const Vector& r_hat, const EstimatorOptions& options = {});

struct ConfidentSubsetResult {
  TauEstimate tau;
  std::size_t subset_size = 0;
  double kappa_fm = 0.0;
  double threshold = 0.5;
};

// Hard estimator restricted to C = {max(p, 1-p) > threshold} with label
// 1{p > 1/2}. m_hat and r_hat come from the full-sample fit restricted to C;
// only the hard residual is cross-fitted inside C (folds restricted from
// `folds`). kappa_fm is the attenuation slope computed on C.
// Throws ConfidentSubsetTooSmall when |C| < options.confident_floor.
ConfidentSubsetResult confident_subset_estimator(const UnlabelledSet& data, double threshold,
                                                 const FoldAssignment& folds,
                                                 const EstimatorOptions& options = {});
ConfidentSubsetResult confident_subset_estimator(const UnlabelledSet& data, double threshold,
                                                 const FoldAssignment& folds,
                                                 const Nuisances& nuisances,
                                                 const EstimatorOptions& options = {});

// OLS of Y on (1, G, X) on the labelled rows; tau_hat is the G coefficient,
// se is HC0-robust. Constant G gives an infinite se and sets `regularized`.
TauEstimate supervised_baseline(const LabelledSet& data);

struct SensitivityBound {
  double delta = 0.0;
  double bound = 0.0;
  double mean_abs_signed_score = 0.0;
};

// |tau_hat| * delta * E_n|2p-1| / (2 V*_hat): worst-case asymptotic bias of
// the soft estimator under calibration drift bounded by delta.
SensitivityBound sensitivity_bound(const SoftEstimatorDetail& detail, double delta);

}  // namespace calibdiag
