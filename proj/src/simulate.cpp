#include "amh/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "amh/random.hpp"

namespace amh {

SimOutput simulate(const ModelSpec& spec, const Theta& theta, Eigen::Index length,
                   std::uint64_t seed, double beta0) {
  validate(spec, theta);
  if (length < 2) throw std::invalid_argument("simulation length must be >= 2");

  NormalStream rng(seed);
  SimOutput out;
  out.seed = seed;
  out.returns.values.resize(length);
  out.true_beta.resize(length);
  out.true_h.resize(length);
  out.returns.dates.reserve(static_cast<std::size_t>(length));
  Date date{1995, 1, 31};
  for (Eigen::Index t = 0; t < length; ++t) {
    out.returns.dates.push_back(date);
    date = date.next_month_end();
  }
  Eigen::VectorXd& y = out.returns.values;

  if (spec.kind == ModelKind::TVAR) {
    const Eigen::Index n = spec.ar_order;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    beta[0] = beta0;
    const double sd_eps = std::sqrt(theta.sigma2_eps);
    for (Eigen::Index t = 0; t < length; ++t) {
      if (t > 0) {
        for (Eigen::Index i = 0; i < n; ++i) {
          beta[i] += std::sqrt(theta.sigma2_w[static_cast<std::size_t>(i)]) * rng.normal();
        }
      }
      double mean = 0.0;
      for (Eigen::Index i = 0; i < std::min(n, t); ++i) mean += beta[i] * y[t - 1 - i];
      y[t] = mean + sd_eps * rng.normal();
      out.true_beta[t] = beta[0];
      out.true_h[t] = theta.sigma2_eps;
    }
    return out;
  }

  const double sd_w = std::sqrt(theta.sigma2_w[0]);
  const double delta = spec.kind == ModelKind::GARCH_M ? theta.delta : 0.0;
  double beta = beta0;
  double h = theta.omega / (1.0 - persistence(spec, theta));
  double shock = 0.0;  // sigma_{t-1} eps_{t-1}
  for (Eigen::Index t = 0; t < length; ++t) {
    if (t > 0) {
      beta += sd_w * rng.normal();
      const double s2 = shock * shock;
      switch (spec.kind) {
        case ModelKind::GARCH11:
        case ModelKind::GARCH_M: h = theta.omega + theta.a1 * s2 + theta.b1 * h; break;
        case ModelKind::T_GARCH: {
          const double a = shock > 0.0 ? theta.a1_plus : (shock < 0.0 ? theta.a1_minus : 0.0);
          h = theta.omega + a * s2 + theta.b1 * h;
          break;
        }
        case ModelKind::A_GARCH: {
          const double pos = std::max(shock, 0.0);
          h = theta.omega + theta.a1 * s2 + theta.a1_plus * pos * pos + theta.b1 * h;
          break;
        }
        case ModelKind::TVAR: break;
      }
    }
    shock = std::sqrt(h) * rng.normal();
    y[t] = (t > 0 ? beta * y[t - 1] : 0.0) + delta * h + shock;
    out.true_beta[t] = beta;
    out.true_h[t] = h;
  }
  return out;
}

}  // namespace amh
