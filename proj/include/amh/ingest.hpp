#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "amh/date.hpp"

namespace amh {

/// Monthly closing prices. Dates strictly increasing, closes > 0, length >= 2.
struct PriceSeries {
  std::vector<Date> dates;
  Eigen::VectorXd closes;

  Eigen::Index size() const { return closes.size(); }
  /// Throws DataError naming the broken invariant.
  void validate() const;
};

/// Log returns y_t, dated by the later of the two prices.
struct ReturnSeries {
  std::vector<Date> dates;
  Eigen::VectorXd values;
  bool mean_adjusted = false;

  Eigen::Index size() const { return values.size(); }
};

struct SummaryStats {
  Eigen::Index n = 0;
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  ///< divisor n-1
  /// m3 / m2^{3/2}; empty when the series has zero variance.
  std::optional<double> skewness;
  /// m4 / m2^2 (normal = 3); empty when the series has zero variance.
  std::optional<double> kurtosis;
};

/// Reads a `date,close` CSV. Irregular month spacing is accepted; a note is
/// appended to `warnings` (when given) for each gap outside 20..45 days.
PriceSeries load_prices(const std::filesystem::path& path,
                        std::vector<std::string>* warnings = nullptr);
PriceSeries parse_prices(std::istream& in, std::vector<std::string>* warnings = nullptr);

ReturnSeries log_returns(const PriceSeries& prices);

/// Subtracts the sample mean. Rejects a series already flagged as adjusted.
ReturnSeries mean_adjust(const ReturnSeries& returns);

SummaryStats summary_stats(const ReturnSeries& returns);
SummaryStats summary_stats(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace amh
