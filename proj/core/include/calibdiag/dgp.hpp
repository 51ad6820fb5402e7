#pragma once

// Synthetic data generator with a calibrated Beta score, optional bounded
// calibration drift, and the classifier modes used by the V* experiments.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "calibdiag/data.hpp"
#include "calibdiag/rng.hpp"

namespace calibdiag {

struct DgpParams {
  std::size_t n = 3000;
  double tau = 1.0;
  double sigma_u = 0.30;
  std::array<double, 3> beta_r{0.6, -0.4, 0.3};
  std::array<double, 3> beta_m{1.0, 0.5, -0.5};
  double noise_sd = 1.0;

  // Beta concentration (1 - sigma_u^2) / sigma_u^2.
  double kappa0() const;
  void validate() const;
};

enum class DriftShape { none, worst_case, linear, symmetric };

std::string_view to_string(DriftShape s);
DriftShape drift_shape_from_string(std::string_view s);

struct DriftSpec {
  DriftShape shape = DriftShape::none;
  double delta = 0.0;
};

// worst_case: delta sgn(2p-1); symmetric: delta sin(pi p); linear: delta (2p-1).
double drift_eta(DriftShape shape, double delta, double p);

enum class ClassifierKind { oracle_score, deterministic_fit, posterior_predictive };

std::string_view to_string(ClassifierKind k);
ClassifierKind classifier_kind_from_string(std::string_view s);

struct ClassifierMode {
  ClassifierKind kind = ClassifierKind::oracle_score;
  double sigma_pp = 0.30;
};

// One draw. x holds the three controls, which double as the classifier
// features (W = X). g is the true label, hidden from the unlabelled view.
struct SimulatedSample {
  Matrix x;
  Vector r;   // E[p | X]
  Vector p;
  Vector g;
  Vector y;
  Vector mu;  // beta_m' X

  // beta_m' X + tau r(X), the outcome regression when there is no drift.
  Vector oracle_m(double tau) const;
  UnlabelledSet unlabelled() const;
  LabelledSet labelled() const;
};

std::vector<Index> all_control_columns();

double logistic(double z) noexcept;

// Rows are generated one at a time: three normals, the Beta score, a uniform
// for G and the outcome noise. G = 1{u < clip(p + eta, 0, 1)}, so zero drift
// leaves the stream identical under every shape.
SimulatedSample sample_dgp(const DgpParams& params, const DriftSpec& drift, std::uint64_t seed);
SimulatedSample sample_dgp(const DgpParams& params, const DriftSpec& drift, Engine& engine);

// Attenuation slope from one large oracle draw: a_soft = p - r(X) and a_hard
// from 5-fold cross-fitted OLS of 1{p > t} on X. One value per threshold.
// Throws InvalidArgument when n_oracle < 100000 unless allow_small is set.
std::vector<double> population_kappas(const DgpParams& params, const std::vector<double>& thresholds,
                                      std::size_t n_oracle, std::uint64_t seed, bool allow_small = false);
double population_kappa(const DgpParams& params, double threshold, std::size_t n_oracle,
                        std::uint64_t seed, bool allow_small = false);

}  // namespace calibdiag
