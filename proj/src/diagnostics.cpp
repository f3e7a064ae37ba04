#include "amh/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "amh/errors.hpp"

namespace amh {

namespace {

/// Centered copy of `y`; throws DegenerateWindow if it has no spread beyond rounding.
Eigen::VectorXd centered_or_throw(const Eigen::Ref<const Eigen::VectorXd>& y) {
  Eigen::VectorXd c = y.array() - y.mean();
  const double noise = 64.0 * std::numeric_limits<double>::epsilon() * y.cwiseAbs().maxCoeff();
  if (c.squaredNorm() <= static_cast<double>(y.size()) * noise * noise) {
    throw DegenerateWindow("degenerate window: zero variance");
  }
  return c;
}

double acf_of_centered(const Eigen::VectorXd& c, double denom, int lag) {
  const Eigen::Index n = c.size();
  return c.tail(n - lag).dot(c.head(n - lag)) / denom;
}

void check_window(const ReturnSeries& r, int window, int lag) {
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  if (window > r.size()) throw std::invalid_argument("window exceeds series length");
  if (lag < 0 || lag >= window) throw std::invalid_argument("lag must satisfy 0 <= lag < window");
}

template <typename Stat>
RollingSeries roll(const ReturnSeries& r, int window, Stat&& stat) {
  RollingSeries out;
  out.window = window;
  const Eigen::Index count = r.size() - window + 1;
  out.end_dates.reserve(static_cast<std::size_t>(count));
  out.values.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index start = 0; start < count; ++start) {
    out.end_dates.push_back(r.dates[static_cast<std::size_t>(start + window - 1)]);
    try {
      out.values.emplace_back(stat(r.values.segment(start, window)));
    } catch (const DegenerateWindow&) {
      out.values.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace

double sample_acf(const Eigen::Ref<const Eigen::VectorXd>& y, int lag) {
  if (lag < 0 || lag >= y.size()) throw std::invalid_argument("lag must satisfy 0 <= lag < n");
  const Eigen::VectorXd c = centered_or_throw(y);
  if (lag == 0) return 1.0;
  return acf_of_centered(c, c.squaredNorm(), lag);
}

AcfResult sample_acf(const ReturnSeries& r, int lag) { return {lag, sample_acf(r.values, lag)}; }

LjungBoxResult ljung_box(const Eigen::Ref<const Eigen::VectorXd>& y, int lag) {
  const Eigen::Index n = y.size();
  if (lag < 1 || lag >= n) throw std::invalid_argument("lag must satisfy 1 <= lag < n");
  const Eigen::VectorXd c = centered_or_throw(y);
  const double denom = c.squaredNorm();
  const double nd = static_cast<double>(n);
  double sum = 0.0;
  for (int k = 1; k <= lag; ++k) {
    const double rho = acf_of_centered(c, denom, k);
    sum += rho * rho / (nd - k);
  }
  const double q = nd * (nd + 2.0) * sum;
  return {lag, q, chi_square_sf(q, lag)};
}

LjungBoxResult ljung_box(const ReturnSeries& r, int lag) { return ljung_box(r.values, lag); }

double chi_square_sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("chi-square degrees of freedom must be >= 1");
  if (!(x >= 0.0)) throw std::invalid_argument("chi-square argument must be >= 0");
  if (x == 0.0) return 1.0;
  const double p = boost::math::gamma_q(0.5 * df, 0.5 * x);
  // Keep the documented (0, 1] range when the tail underflows.
  return std::max(p, std::numeric_limits<double>::min());
}

double acf_confidence_bound(int window, double alpha) {
  if (window < 2) throw std::invalid_argument("window must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 1.0 - 0.5 * alpha);
  return z / std::sqrt(static_cast<double>(window));
}

RollingSeries rolling_acf(const ReturnSeries& r, int window, int lag, double alpha) {
  check_window(r, window, lag);
  const double bound = acf_confidence_bound(window, alpha);
  RollingSeries out = roll(r, window, [lag](const auto& seg) { return sample_acf(seg, lag); });
  out.lower_bound = -bound;
  out.upper_bound = bound;
  return out;
}

RollingSeries rolling_ljung_box(const ReturnSeries& r, int window, int lag) {
  check_window(r, window, lag);
  if (lag < 1) throw std::invalid_argument("Ljung-Box lag must be >= 1");
  return roll(r, window, [lag](const auto& seg) { return ljung_box(seg, lag).p_value; });
}

}  // namespace amh
