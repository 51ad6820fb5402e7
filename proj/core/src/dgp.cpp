#include "calibdiag/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "calibdiag/errors.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/learners.hpp"

namespace calibdiag {

double DgpParams::kappa0() const { return (1.0 - sigma_u * sigma_u) / (sigma_u * sigma_u); }

void DgpParams::validate() const {
  if (!(sigma_u > 0.0 && sigma_u < 1.0)) throw InvalidArgument("sigma_u must lie in (0, 1)");
  if (!(noise_sd > 0.0)) throw InvalidArgument("noise_sd must be positive");
  if (n < 1) throw InvalidArgument("n must be positive");
}

std::string_view to_string(DriftShape s) {
  switch (s) {
    case DriftShape::none: return "none";
    case DriftShape::worst_case: return "worst_case";
    case DriftShape::linear: return "linear";
    case DriftShape::symmetric: return "symmetric";
  }
  return "unknown";
}

DriftShape drift_shape_from_string(std::string_view s) {
  if (s == "none") return DriftShape::none;
  if (s == "worst_case") return DriftShape::worst_case;
  if (s == "linear") return DriftShape::linear;
  if (s == "symmetric") return DriftShape::symmetric;
  throw InvalidArgument("unknown drift shape '" + std::string(s) + "'");
}

double drift_eta(DriftShape shape, double delta, double p) {
  switch (shape) {
    case DriftShape::none: return 0.0;
    case DriftShape::worst_case: {
      const double s = 2.0 * p - 1.0;
      return s > 0.0 ? delta : (s < 0.0 ? -delta : 0.0);
    }
    case DriftShape::linear: return delta * (2.0 * p - 1.0);
    case DriftShape::symmetric: return delta * std::sin(std::numbers::pi * p);
  }
  throw InvalidArgument("unknown drift shape");
}

std::string_view to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::oracle_score: return "oracle_score";
    case ClassifierKind::deterministic_fit: return "deterministic_fit";
    case ClassifierKind::posterior_predictive: return "posterior_predictive";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_string(std::string_view s) {
  if (s == "oracle_score") return ClassifierKind::oracle_score;
  if (s == "deterministic_fit") return ClassifierKind::deterministic_fit;
  if (s == "posterior_predictive") return ClassifierKind::posterior_predictive;
  throw InvalidArgument("unknown classifier mode '" + std::string(s) + "'");
}

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<Index> all_control_columns() { return {0, 1, 2}; }

Vector SimulatedSample::oracle_m(double tau) const { return mu + tau * r; }

UnlabelledSet SimulatedSample::unlabelled() const { return UnlabelledSet(x, all_control_columns(), p, y); }

LabelledSet SimulatedSample::labelled() const { return LabelledSet(x, all_control_columns(), g, y, p); }

SimulatedSample sample_dgp(const DgpParams& params, const DriftSpec& drift, std::uint64_t seed) {
  Engine engine(seed);
  return sample_dgp(params, drift, engine);
}

SimulatedSample sample_dgp(const DgpParams& params, const DriftSpec& drift, Engine& engine) {
  params.validate();
  if (!(drift.delta >= 0.0)) throw InvalidArgument("drift delta must be nonnegative");
  const auto n = static_cast<Index>(params.n);
  const double k0 = params.kappa0();

  SimulatedSample s;
  s.x.resize(n, 3);
  s.r.resize(n);
  s.p.resize(n);
  s.g.resize(n);
  s.y.resize(n);
  s.mu.resize(n);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    double lin_r = 0.0;
    double lin_m = 0.0;
    for (Index j = 0; j < 3; ++j) {
      const double v = normal(engine);
      s.x(i, j) = v;
      lin_r += params.beta_r[static_cast<std::size_t>(j)] * v;
      lin_m += params.beta_m[static_cast<std::size_t>(j)] * v;
    }
    const double r = logistic(lin_r);
    const double p = sample_beta(engine, r * k0, (1.0 - r) * k0);
    const double q = std::clamp(p + drift_eta(drift.shape, drift.delta, p), 0.0, 1.0);
    const double g = uniform(engine) < q ? 1.0 : 0.0;
    s.r[i] = r;
    s.p[i] = p;
    s.g[i] = g;
    s.mu[i] = lin_m;
    s.y[i] = lin_m + params.tau * g + params.noise_sd * normal(engine);
  }
  return s;
}

std::vector<double> population_kappas(const DgpParams& params, const std::vector<double>& thresholds,
                                      std::size_t n_oracle, std::uint64_t seed, bool allow_small) {
  if (n_oracle < 100000 && !allow_small) throw InvalidArgument("population_kappa needs n_oracle >= 100000");
  DgpParams big = params;
  big.n = n_oracle;
  const SimulatedSample s = sample_dgp(big, DriftSpec{}, seed);
  const UnlabelledSet u = s.unlabelled();
  const FoldAssignment folds = make_folds(n_oracle, 5, splitmix64(seed));
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    const Residuals res = compute_residuals(u, t, folds, s.r, LearnerConfig::ols());
    out.push_back(kappa_from_residuals(res));
  }
  return out;
}

double population_kappa(const DgpParams& params, double threshold, std::size_t n_oracle,
                        std::uint64_t seed, bool allow_small) {
  return population_kappas(params, {threshold}, n_oracle, seed, allow_small).front();
}

}  // namespace calibdiag
