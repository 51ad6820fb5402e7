#include "calibdiag/errors.hpp"

#include <sstream>

namespace calibdiag {

namespace {

std::string fold_count_message(std::size_t n, std::size_t k) {
  std::ostringstream os;
  os << "invalid fold count: k=" << k << " for n=" << n << " (need 2 <= k <= n)";
  return os.str();
}

std::string with_fold(const std::string& what, std::optional<std::size_t> fold) {
  if (!fold) return what;
  return "fold " + std::to_string(*fold) + ": " + what;
}

}  // namespace

InvalidFoldCount::InvalidFoldCount(std::size_t n, std::size_t k)
    : Error(fold_count_message(n, k)), n_(n), k_(k) {}

SingularDesign::SingularDesign(const std::string& what, std::optional<std::size_t> fold)
    : Error(with_fold(what, fold)), fold_(fold) {}

VStarCollapse::VStarCollapse(double v_star_hat)
    : Error("residual score variance collapsed (V*_hat=" + std::to_string(v_star_hat) +
            "): p is a deterministic function of X and the moment equation is uninformative"),
      v_star_hat_(v_star_hat) {}

DegenerateThreshold::DegenerateThreshold(double threshold, const std::string& reason)
    : Error("degenerate threshold " + std::to_string(threshold) + ": " + reason),
      threshold_(threshold) {}

ConfidentSubsetTooSmall::ConfidentSubsetTooSmall(std::size_t subset_size, std::size_t floor)
    : Error("confident subset too small: |C|=" + std::to_string(subset_size) +
            " below floor " + std::to_string(floor)),
      subset_size_(subset_size) {}

SchemaError::SchemaError(const std::string& column, const std::string& reason)
    : Error("schema error for column '" + column + "': " + reason), column_(column) {}

ValidationError::ValidationError(std::size_t row, const std::string& reason)
    : Error("validation error at row " + std::to_string(row) + ": " + reason), row_(row) {}

IoError::IoError(const std::string& path, const std::string& reason)
    : Error("I/O error on '" + path + "': " + reason), path_(path) {}

}  // namespace calibdiag
