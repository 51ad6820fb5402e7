#pragma once

// Monte Carlo runners for the five simulation experiments and the
// aggregation helpers they share.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "calibdiag/data.hpp"
#include "calibdiag/dgp.hpp"
#include "calibdiag/learners.hpp"

namespace calibdiag {

struct McSummary {
  double mean_estimate = 0.0;
  double mc_variance = 0.0;  // divisor R
  double mc_se_of_mean = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double coverage_95 = 0.0;
  std::size_t replications = 0;
};

// Throws EmptyInput on an empty array.
McSummary mc_aggregate(std::span<const TauEstimate> estimates, double true_tau);

struct BonferroniResult {
  std::vector<double> z;
  std::vector<double> p_value;
  std::vector<bool> cell_reject;
  bool family_reject = false;
  double level = 0.0;  // alpha / m
};

// z = (observed - predicted) / mc_se, two-sided normal p, reject iff p < alpha/m.
// Throws InvalidArgument on a non-positive se or mismatched lengths.
BonferroniResult bonferroni_ztest(std::span<const double> observed, std::span<const double> predicted,
                                  std::span<const double> mc_ses, double alpha);

enum class ExperimentId { p1, p2, p3, p4, p5 };

std::string_view to_string(ExperimentId id);
ExperimentId experiment_from_string(std::string_view s);

// How nuisances m(X), r(X) are obtained inside the runners.
enum class NuisanceMode { standard, oracle, cross_fit };

std::string_view to_string(NuisanceMode m);
NuisanceMode nuisance_mode_from_string(std::string_view s);

std::size_t default_replications(ExperimentId id, bool paper_scale);

struct ExperimentConfig {
  std::optional<std::size_t> replications;
  bool paper_scale = false;
  // standard: oracle for p1-p3, cross-fitted for p4-p5.
  NuisanceMode nuisance = NuisanceMode::standard;
  std::size_t folds_k = 5;
  LearnerConfig learner = LearnerConfig::ridge_gcv();
  std::size_t threads = 0;
  std::optional<std::size_t> n_u;
  // Oracle draw for the kappa prediction column.
  std::size_t n_oracle = 1000000;
};

struct P1Row {
  double threshold = 0.0;
  double kappa_pred = 0.0;
  double soft_mean = 0.0;
  double hard_mean = 0.0;
  double mc_se = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct P1Result {
  std::vector<P1Row> rows;
  McSummary soft;
  double bonferroni_level = 0.0;
  bool family_reject = false;
};

struct P2Row {
  double sigma_u = 0.0;
  double v_star = 0.0;
  double sandwich_var = 0.0;
  double mc_var = 0.0;
  double coverage_95 = 0.0;
  double mse_ratio = 0.0;  // soft / supervised
  McSummary soft;
  McSummary supervised;
  std::size_t failures = 0;
};

struct P3Row {
  double threshold = 0.0;
  double kappa_fm = 0.0;
  double mean_subset_size = 0.0;
  double bias2 = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double mse_ratio = 0.0;  // over the soft-baseline MSE
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct P3Result {
  std::vector<P3Row> rows;
  McSummary soft;
};

struct P4Row {
  DriftShape shape = DriftShape::worst_case;
  double delta = 0.0;
  double emp_bias = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  double mc_se = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct P5Row {
  std::size_t n_l = 0;
  double v_star_deterministic = 0.0;
  double v_star_posterior_predictive = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
};

P1Result run_p1(const ExperimentConfig& cfg, std::uint64_t master_seed);
std::vector<P2Row> run_p2(const ExperimentConfig& cfg, std::uint64_t master_seed,
                          const std::vector<double>& sigmas = {0.1, 0.2, 0.3, 0.4, 0.5});
P3Result run_p3(const ExperimentConfig& cfg, std::uint64_t master_seed);
std::vector<P4Row> run_p4(const ExperimentConfig& cfg, std::uint64_t master_seed);
std::vector<P5Row> run_p5(const ExperimentConfig& cfg, std::uint64_t master_seed,
                          double sigma_pp = 0.30);

// Score of one deterministic classifier: logistic on the poly2 expansion of X
// fitted on the first half of the labelled rows, isotonic recalibration on
// the second half, applied to `x_score` and clipped to [1e-6, 1 - 1e-6].
Vector fit_and_score_classifier(const Matrix& x_labelled, const Vector& g_labelled, const Matrix& x_score);

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> notes;
};

Table to_table(const P1Result& r);
Table to_table(const std::vector<P2Row>& rows);
Table to_table(const P3Result& r);
Table to_table(const std::vector<P4Row>& rows);
Table to_table(const std::vector<P5Row>& rows);

Table run_experiment(ExperimentId id, const ExperimentConfig& cfg, std::uint64_t master_seed);

}  // namespace calibdiag
