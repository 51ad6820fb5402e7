#pragma once

// End-to-end diagnostic: residualise, compute V*_hat, sweep thresholds for
// kappa_hat, compare implied standard errors, and recommend an estimator.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "calibdiag/calibration.hpp"
#include "calibdiag/data.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/learners.hpp"

namespace calibdiag {

enum class Decision { prefer_supervised, prefer_soft, either_acceptable, collapse };

std::string_view to_string(Decision d);
Decision decision_from_string(std::string_view s);

struct DiagnosticConfig {
  std::vector<double> thresholds{0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
  std::size_t folds_k = 5;
  LearnerConfig learner = LearnerConfig::ridge_gcv();
  double kappa_tolerance = 0.10;
  std::uint64_t seed = 0;
  double epsilon_vstar = kEpsilonVStar;
  // Worker threads for the threshold sweep (0 = hardware concurrency).
  std::size_t threads = 1;

  // Throws InvalidArgument on an empty, unsorted or out-of-range grid.
  void validate() const;
};

struct DiagnosticReport {
  double v_star_hat = 0.0;
  std::vector<KappaEstimate> kappas;
  // Infinite when V*_hat collapsed.
  double se_soft_implied = 0.0;
  std::optional<double> se_supervised;
  std::optional<LabelLeakResult> label_leak;
  Decision decision = Decision::either_acceptable;
  std::vector<std::string> notes;
  std::uint64_t seed = 0;
  std::string version;
};

bool operator==(const KappaEstimate& a, const KappaEstimate& b);
bool operator==(const LabelLeakResult& a, const LabelLeakResult& b);
bool operator==(const DiagnosticReport& a, const DiagnosticReport& b);

// Step-4 cascade from already computed quantities.
Decision decide(double v_star_hat, double epsilon_vstar, double se_soft_implied,
                std::optional<double> se_supervised, const std::vector<KappaEstimate>& kappas,
                double kappa_tolerance);

// The labelled set, when present, must share the unlabelled set's X width.
// Degenerate thresholds are skipped with a note; nothing else is fatal
// except invalid configuration or inputs.
DiagnosticReport run_diagnostic(const UnlabelledSet& u, const std::optional<LabelledSet>& l,
                                const DiagnosticConfig& cfg);

std::string library_version();

}  // namespace calibdiag
