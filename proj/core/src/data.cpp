#include "calibdiag/data.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "calibdiag/errors.hpp"

namespace calibdiag {

namespace {

void check_x_cols(const Matrix& w, const std::vector<Index>& x_cols) {
  std::vector<Index> sorted = x_cols;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw InvalidArgument("x_cols contains duplicate column indices");
  }
  for (Index c : x_cols) {
    if (c < 0 || c >= w.cols()) {
      throw InvalidArgument("x_cols index " + std::to_string(c) + " outside W with " +
                            std::to_string(w.cols()) + " columns");
    }
  }
}

void check_length(Index expected, Index got, const char* what) {
  if (expected != got) {
    throw InvalidArgument(std::string(what) + " has length " + std::to_string(got) +
                          ", expected " + std::to_string(expected));
  }
}

}  // namespace

LabelledSet::LabelledSet(Matrix w, std::vector<Index> x_cols, Vector g, Vector y,
                         std::optional<Vector> p)
    : w_(std::move(w)), x_cols_(std::move(x_cols)), g_(std::move(g)), y_(std::move(y)),
      p_(std::move(p)) {
  if (y_.size() < 1) throw InvalidArgument("labelled set needs at least one row");
  check_length(y_.size(), w_.rows(), "w");
  check_length(y_.size(), g_.size(), "g");
  check_x_cols(w_, x_cols_);
  for (Index i = 0; i < g_.size(); ++i) {
    if (g_[i] != 0.0 && g_[i] != 1.0) throw ValidationError(static_cast<std::size_t>(i), "g must be 0 or 1");
  }
  if (p_) {
    check_length(y_.size(), p_->size(), "p");
    for (Index i = 0; i < p_->size(); ++i) {
      const double v = (*p_)[i];
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(static_cast<std::size_t>(i), "p outside [0,1]");
    }
  }
}

UnlabelledSet::UnlabelledSet(Matrix w, std::vector<Index> x_cols, Vector p, Vector y)
    : w_(std::move(w)), x_cols_(std::move(x_cols)), p_(std::move(p)), y_(std::move(y)) {
  if (y_.size() < 2) throw InvalidArgument("unlabelled set needs at least two rows");
  check_length(y_.size(), w_.rows(), "w");
  check_length(y_.size(), p_.size(), "p");
  check_x_cols(w_, x_cols_);
  for (Index i = 0; i < p_.size(); ++i) {
    if (!(p_[i] >= 0.0 && p_[i] <= 1.0)) throw ValidationError(static_cast<std::size_t>(i), "p outside [0,1]");
  }
}

Matrix extract_controls(const Matrix& w, std::span<const Index> x_cols) {
  Matrix x(w.rows(), static_cast<Index>(x_cols.size()));
  for (std::size_t j = 0; j < x_cols.size(); ++j) x.col(static_cast<Index>(j)) = w.col(x_cols[j]);
  return x;
}

Matrix extract_controls(const LabelledSet& set) { return extract_controls(set.w(), set.x_cols()); }
Matrix extract_controls(const UnlabelledSet& set) { return extract_controls(set.w(), set.x_cols()); }

Matrix take_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

Vector take_rows(const Vector& v, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

UnlabelledSet take_rows(const UnlabelledSet& set, std::span<const Index> rows) {
  return UnlabelledSet(take_rows(set.w(), rows), set.x_cols(), take_rows(set.p(), rows),
                       take_rows(set.y(), rows));
}

FoldAssignment::FoldAssignment(std::size_t k, std::vector<int> assignment)
    : k_(k), assignment_(std::move(assignment)) {
  if (k_ < 2 || k_ > assignment_.size()) throw InvalidFoldCount(assignment_.size(), k_);
  std::vector<std::size_t> sizes(k_, 0);
  for (int f : assignment_) {
    if (f < 0 || static_cast<std::size_t>(f) >= k_) throw InvalidArgument("fold index out of range");
    ++sizes[static_cast<std::size_t>(f)];
  }
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  if (*lo == 0 || *hi - *lo > 1) throw InvalidArgument("fold assignment is not balanced");
}

std::vector<Index> FoldAssignment::members(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignment_.size(); ++i) {
    if (assignment_[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(k_, 0);
  for (int f : assignment_) ++sizes[static_cast<std::size_t>(f)];
  return sizes;
}

FoldAssignment make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) throw InvalidFoldCount(n, k);
  std::vector<int> assignment(n);
  for (std::size_t i = 0; i < n; ++i) assignment[i] = static_cast<int>(i % k);
  std::mt19937_64 engine(seed);
  std::shuffle(assignment.begin(), assignment.end(), engine);
  return FoldAssignment(k, std::move(assignment));
}

FoldAssignment restrict_folds(const FoldAssignment& parent, std::span<const Index> rows) {
  const std::size_t k = parent.k();
  if (rows.size() < k) throw InvalidFoldCount(rows.size(), k);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return parent.fold_of(static_cast<std::size_t>(rows[a])) <
           parent.fold_of(static_cast<std::size_t>(rows[b]));
  });
  std::vector<int> assignment(rows.size());
  for (std::size_t q = 0; q < order.size(); ++q) assignment[order[q]] = static_cast<int>(q % k);
  return FoldAssignment(k, std::move(assignment));
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::supervised: return "supervised";
    case Method::soft: return "soft";
    case Method::hard: return "hard";
    case Method::confident: return "confident";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "supervised") return Method::supervised;
  if (s == "soft") return Method::soft;
  if (s == "hard") return Method::hard;
  if (s == "confident") return Method::confident;
  throw InvalidArgument("unknown method '" + std::string(s) + "'");
}

TauEstimate TauEstimate::make(double tau_hat, double se, std::size_t n_used, Method method) {
  TauEstimate t;
  t.tau_hat = tau_hat;
  t.se = se;
  t.ci_lo = tau_hat - kWaldCritical * se;
  t.ci_hi = tau_hat + kWaldCritical * se;
  t.n_used = n_used;
  t.method = method;
  return t;
}

double mean(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return v.sum() / static_cast<double>(v.size());
}

}  // namespace calibdiag
