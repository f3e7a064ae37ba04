#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "amh/date.hpp"
#include "amh/ingest.hpp"

namespace amh {

struct AcfResult {
  int lag = 0;
  double rho = 0.0;
};

struct LjungBoxResult {
  int lag = 0;
  double q = 0.0;
  double p_value = 1.0;
};

/// A statistic evaluated on each of the N - w + 1 windows of length w, keyed
/// by the date of the window's last observation. Degenerate windows carry an
/// empty value. Bounds are set for autocorrelation series only.
struct RollingSeries {
  int window = 0;
  std::vector<Date> end_dates;
  std::vector<std::optional<double>> values;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;

  std::size_t size() const { return values.size(); }
};

/// Sample autocorrelation at `lag` with the centered full-sample sum of
/// squares as denominator. Throws DegenerateWindow for a constant series.
double sample_acf(const Eigen::Ref<const Eigen::VectorXd>& y, int lag);
AcfResult sample_acf(const ReturnSeries& r, int lag);

/// Q(l) = n(n+2) sum_{k<=l} rho_k^2 / (n-k), with a chi-square(l) p-value.
LjungBoxResult ljung_box(const Eigen::Ref<const Eigen::VectorXd>& y, int lag);
LjungBoxResult ljung_box(const ReturnSeries& r, int lag);

/// Upper tail P(X > x) for X ~ chi-square(df).
double chi_square_sf(double x, int df);

/// Half-width z_{1-alpha/2} / sqrt(w) of the two-sided band for rho under
/// the white-noise null.
double acf_confidence_bound(int window, double alpha);

RollingSeries rolling_acf(const ReturnSeries& r, int window, int lag, double alpha);
RollingSeries rolling_ljung_box(const ReturnSeries& r, int window, int lag);

}  // namespace amh
