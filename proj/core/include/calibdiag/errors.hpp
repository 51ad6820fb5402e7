#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace calibdiag {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidFoldCount : public Error {
 public:
  InvalidFoldCount(std::size_t n, std::size_t k);
  std::size_t n() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }

 private:
  std::size_t n_;
  std::size_t k_;
};

class SingularDesign : public Error {
 public:
  explicit SingularDesign(const std::string& what, std::optional<std::size_t> fold = std::nullopt);
  std::optional<std::size_t> fold() const noexcept { return fold_; }

 private:
  std::optional<std::size_t> fold_;
};

// Residual score variance at or below the collapse floor: p is (numerically)
// a deterministic function of X and the moment equation carries no signal.
class VStarCollapse : public Error {
 public:
  explicit VStarCollapse(double v_star_hat);
  double v_star_hat() const noexcept { return v_star_hat_; }

 private:
  double v_star_hat_;
};

class DegenerateThreshold : public Error {
 public:
  DegenerateThreshold(double threshold, const std::string& reason);
  double threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
};

class ConfidentSubsetTooSmall : public Error {
 public:
  ConfidentSubsetTooSmall(std::size_t subset_size, std::size_t floor);
  std::size_t subset_size() const noexcept { return subset_size_; }

 private:
  std::size_t subset_size_;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class DegenerateTest : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(const std::string& column, const std::string& reason);
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::size_t row, const std::string& reason);
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& reason);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace calibdiag
