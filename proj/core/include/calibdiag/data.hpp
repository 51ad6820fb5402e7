#pragma once

// Tabular containers shared by every module.
//
// The downstream controls X are never stored separately: a set carries the
// classifier feature matrix W together with the column indices of W that make
// up X, so X is a sub-vector of W by construction.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace calibdiag {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Labelled rows (W, X, G, Y). Scores p on the labelled rows are optional and
// only needed for the label-leak test.
class LabelledSet {
 public:
  LabelledSet(Matrix w, std::vector<Index> x_cols, Vector g, Vector y,
              std::optional<Vector> p = std::nullopt);

  const Matrix& w() const noexcept { return w_; }
  const std::vector<Index>& x_cols() const noexcept { return x_cols_; }
  const Vector& g() const noexcept { return g_; }
  const Vector& y() const noexcept { return y_; }
  const std::optional<Vector>& p() const noexcept { return p_; }
  Index size() const noexcept { return y_.size(); }

 private:
  Matrix w_;
  std::vector<Index> x_cols_;
  Vector g_;
  Vector y_;
  std::optional<Vector> p_;
};

// Unlabelled rows (W, X, p, Y) with p a calibrated score in [0, 1].
class UnlabelledSet {
 public:
  UnlabelledSet(Matrix w, std::vector<Index> x_cols, Vector p, Vector y);

  const Matrix& w() const noexcept { return w_; }
  const std::vector<Index>& x_cols() const noexcept { return x_cols_; }
  const Vector& p() const noexcept { return p_; }
  const Vector& y() const noexcept { return y_; }
  Index size() const noexcept { return y_.size(); }

 private:
  Matrix w_;
  std::vector<Index> x_cols_;
  Vector p_;
  Vector y_;
};

// X submatrix of w, columns in x_cols order. An empty x_cols yields n x 0.
Matrix extract_controls(const Matrix& w, std::span<const Index> x_cols);
Matrix extract_controls(const LabelledSet& set);
Matrix extract_controls(const UnlabelledSet& set);

// Row subsets, preserving the order of `rows`.
Matrix take_rows(const Matrix& m, std::span<const Index> rows);
Vector take_rows(const Vector& v, std::span<const Index> rows);
UnlabelledSet take_rows(const UnlabelledSet& set, std::span<const Index> rows);

// Balanced partition of {0..n-1} into k folds.
class FoldAssignment {
 public:
  FoldAssignment(std::size_t k, std::vector<int> assignment);

  std::size_t n() const noexcept { return assignment_.size(); }
  std::size_t k() const noexcept { return k_; }
  int fold_of(std::size_t row) const { return assignment_.at(row); }
  const std::vector<int>& assignment() const noexcept { return assignment_; }
  std::vector<Index> members(int fold) const;
  std::vector<std::size_t> fold_sizes() const;

  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;

 private:
  std::size_t k_;
  std::vector<int> assignment_;
};

// Uniformly random balanced partition, fully determined by seed.
// Throws InvalidFoldCount unless 2 <= k <= n.
FoldAssignment make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Balanced k-fold partition of a row subset that keeps the parent's fold
// order: members are listed by (parent fold, row) and dealt round-robin.
// Deterministic, no RNG involved. Throws InvalidFoldCount if rows.size() < k.
FoldAssignment restrict_folds(const FoldAssignment& parent, std::span<const Index> rows);

enum class Method { supervised, soft, hard, confident };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

inline constexpr double kWaldCritical = 1.96;

struct TauEstimate {
  double tau_hat = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_used = 0;
  Method method = Method::soft;
  // Set when a singular design forced the small ridge fallback.
  bool regularized = false;

  static TauEstimate make(double tau_hat, double se, std::size_t n_used, Method method);
};

struct Residuals {
  Vector a_soft;  // p - r_hat(X)
  Vector a_hard;  // G~ - E_hat[G~ | X]
  double threshold = 0.5;
};

// Sample mean with divisor n.
double mean(const Vector& v);

}  // namespace calibdiag
