#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace amh {

/// Malformed or invalid input data (unreadable file, bad CSV row, broken invariant).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A window or series with zero variance, where ratios of moments are undefined.
class DegenerateWindow : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite state, covariance or likelihood, or a non-positive innovation
/// variance, detected while running the filter.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(std::ptrdiff_t step, const std::string& what)
      : std::runtime_error("numerical failure at step " + std::to_string(step) + ": " + what),
        step_(step) {}

  std::ptrdiff_t step() const noexcept { return step_; }

 private:
  std::ptrdiff_t step_;
};

/// Calibration could not evaluate the likelihood at any probed parameter.
class FitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amh
