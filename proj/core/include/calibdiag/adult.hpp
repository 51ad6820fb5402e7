#pragma once

// UCI Adult census income pipeline. The data file is never bundled; users
// supply adult.data (headerless) or a CSV with the same column names.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "calibdiag/data.hpp"
#include "calibdiag/diagnostic.hpp"
#include "calibdiag/experiments.hpp"
#include "calibdiag/learners.hpp"

namespace calibdiag {

// Column names of the UCI file, in file order.
const std::vector<std::string>& adult_columns();

struct AdultData {
  // Classifier features: poly2 of the standardized continuous columns (age,
  // hours-per-week, capital-gain, capital-loss), then sex, then one-hot
  // occupation, marital-status, workclass, relationship, race, native-country.
  Matrix w;
  std::vector<std::string> w_names;
  // Controls (age, hours-per-week, sex) as columns of w.
  std::vector<Index> x_cols;
  Vector g;  // income > 50K
  Vector y;  // education-num
  std::size_t dropped_rows = 0;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
};

// Rows with "?" in any column are dropped.
AdultData load_adult(const std::string& path);
AdultData adult_from_text(const std::string& text);

struct AdultConfig {
  std::string csv_path;
  std::vector<std::size_t> n_l{500, 1000, 2000};
  std::size_t splits = 30;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::size_t folds_k = 5;
  std::size_t threads = 0;
};

struct AdultRow {
  std::size_t n_l = 0;
  double v_star = 0.0;
  double mse_supervised = 0.0;
  double bias_soft = 0.0;
  double mse_soft = 0.0;
  double bias_hard = 0.0;
  double mse_hard = 0.0;
  double v_star_min = 0.0;
  std::size_t prefer_supervised = 0;
  std::size_t prefer_soft = 0;
  std::size_t either_acceptable = 0;
  std::size_t collapse = 0;
  std::size_t failures = 0;

  // Most frequent decision over the splits; ties resolve in enum order.
  Decision modal_decision() const;
};

struct AdultResult {
  std::size_t rows = 0;
  std::size_t dropped_rows = 0;
  double tau_full = 0.0;
  std::vector<AdultRow> table;
};

AdultResult run_adult(const AdultData& data, const AdultConfig& cfg);
AdultResult run_adult(const AdultConfig& cfg);

Table to_table(const AdultResult& r);

}  // namespace calibdiag
