#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "amh/ingest.hpp"
#include "amh/random.hpp"

namespace amh::testing {

/// Returns series with month-end dates from 2000-01-31, not mean-adjusted.
inline ReturnSeries make_series(const Eigen::VectorXd& values, bool adjusted = false) {
  ReturnSeries r;
  r.values = values;
  r.mean_adjusted = adjusted;
  Date d{2000, 1, 31};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    r.dates.push_back(d);
    d = d.next_month_end();
  }
  return r;
}

inline ReturnSeries make_series(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return make_series(v);
}

inline Eigen::VectorXd gaussian_noise(Eigen::Index n, std::uint64_t seed, double sd = 1.0) {
  NormalStream rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = sd * rng.normal();
  return v;
}

/// Standard normal quantile by bisection on the complementary error function.
inline double normal_quantile(double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = 0.5 * std::erfc(-mid / std::sqrt(2.0));
    (cdf < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Chi-square upper tail by Simpson integration of the density (df >= 1).
inline double chi_square_sf_quadrature(double x, int df) {
  const double k = 0.5 * df;
  const double log_norm = -k * std::log(2.0) - std::lgamma(k);
  // Substitute s = sqrt(t) on [0, x] to tame the t^{-1/2} singularity at df = 1.
  const auto g = [&](double s) {
    if (s == 0.0) return df == 1 ? 2.0 * std::exp(log_norm) : 0.0;
    const double t = s * s;
    return 2.0 * s * std::exp(log_norm + (k - 1.0) * std::log(t) - 0.5 * t);
  };
  const int m = 20000;
  const double b = std::sqrt(x);
  const double h = b / m;
  double acc = g(0.0) + g(b);
  for (int i = 1; i < m; ++i) acc += (i % 2 ? 4.0 : 2.0) * g(i * h);
  return 1.0 - acc * h / 3.0;
}

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct JointGaussian {
  std::vector<Eigen::MatrixXd> X;  ///< z -> x_t for each t
  Eigen::MatrixXd Ay;              ///< z -> y
  Eigen::VectorXd mz;
  Eigen::MatrixXd Sz;
};

/// Joint Gaussian of the states and observations of x_t = F x_{t-1} + G w_t,
/// y_t = H x_t + v_t as linear maps of z = [x_{-1}; w_0..w_{T-1}; v_0..v_{T-1}].
/// The prior (x0, P0) is the state one step before y_0.
inline JointGaussian joint_gaussian(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                    const Eigen::MatrixXd& Q, const Eigen::RowVectorXd& H, double R,
                                    const Eigen::VectorXd& x0, const Eigen::MatrixXd& P0,
                                    Eigen::Index T) {
  const Eigen::Index n = F.rows();
  const Eigen::Index q = G.cols();
  const Eigen::Index nz = n + T * q + T;
  Eigen::VectorXd mz = Eigen::VectorXd::Zero(nz);
  mz.head(n) = x0;
  Eigen::MatrixXd Sz = Eigen::MatrixXd::Zero(nz, nz);
  Sz.topLeftCorner(n, n) = P0;
  for (Eigen::Index t = 0; t < T; ++t) Sz.block(n + t * q, n + t * q, q, q) = Q;
  for (Eigen::Index t = 0; t < T; ++t) Sz(n + T * q + t, n + T * q + t) = R;

  // Rows of the linear map z -> x_t, built forward.
  std::vector<Eigen::MatrixXd> X;
  Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(n, nz);
  prev.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::MatrixXd cur = F * prev;
    cur.block(0, n + t * q, n, q) += G;
    X.push_back(cur);
    prev = cur;
  }
  Eigen::MatrixXd Ay(T, nz);
  for (Eigen::Index t = 0; t < T; ++t) {
    Ay.row(t) = H * X[static_cast<std::size_t>(t)];
    Ay(t, n + T * q + t) += 1.0;
  }
  return {std::move(X), std::move(Ay), std::move(mz), std::move(Sz)};
}

/// Posterior of x_target given all of y, by direct Gaussian conditioning.
inline Posterior brute_force_posterior(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                       const Eigen::MatrixXd& Q, const Eigen::RowVectorXd& H,
                                       double R, const Eigen::VectorXd& x0,
                                       const Eigen::MatrixXd& P0, const Eigen::VectorXd& y,
                                       Eigen::Index target = -1) {
  const JointGaussian j = joint_gaussian(F, G, Q, H, R, x0, P0, y.size());
  const Eigen::MatrixXd& Ax = j.X[static_cast<std::size_t>(target < 0 ? y.size() - 1 : target)];
  const Eigen::MatrixXd& Ay = j.Ay;
  const Eigen::VectorXd& mz = j.mz;
  const Eigen::MatrixXd& Sz = j.Sz;
  const Eigen::VectorXd mx = Ax * mz;
  const Eigen::VectorXd my = Ay * mz;
  const Eigen::MatrixXd Sxx = Ax * Sz * Ax.transpose();
  const Eigen::MatrixXd Sxy = Ax * Sz * Ay.transpose();
  const Eigen::MatrixXd Syy = Ay * Sz * Ay.transpose();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(Syy);
  Posterior p;
  p.mean = mx + Sxy * ldlt.solve(y - my);
  p.cov = Sxx - Sxy * ldlt.solve(Sxy.transpose());
  return p;
}

/// log N(y; E[y], Cov[y]) of the whole observation vector.
inline double brute_force_log_likelihood(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G,
                                         const Eigen::MatrixXd& Q, const Eigen::RowVectorXd& H,
                                         double R, const Eigen::VectorXd& x0,
                                         const Eigen::MatrixXd& P0, const Eigen::VectorXd& y) {
  const JointGaussian j = joint_gaussian(F, G, Q, H, R, x0, P0, y.size());
  const Eigen::MatrixXd S = j.Ay * j.Sz * j.Ay.transpose();
  const Eigen::VectorXd d = y - j.Ay * j.mz;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi) + logdet +
                 d.dot(llt.solve(d)));
}

/// A random time-invariant instance with state dimension 1..3, 1..3 noise
/// components and 1..5 observations.
struct SmallInstance {
  Eigen::MatrixXd F, G, Q;
  Eigen::RowVectorXd H;
  double R = 1.0;
  Eigen::VectorXd x0;
  Eigen::MatrixXd P0;
  Eigen::VectorXd y;
};

inline SmallInstance random_instance(std::uint64_t seed) {
  NormalStream rng(seed);
  const auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
  };
  const auto gauss = [&](Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    }
    return m;
  };
  const Eigen::Index n = pick(1, 3);
  const Eigen::Index q = pick(1, 3);
  const Eigen::Index T = pick(1, 5);
  SmallInstance s;
  s.F = 0.5 * gauss(n, n);
  s.G = gauss(n, q);
  const Eigen::MatrixXd L = gauss(q, q);
  s.Q = 0.5 * L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(q, q);
  s.H = gauss(1, n);
  s.R = 0.2 + rng.uniform();
  s.x0 = gauss(n, 1);
  const Eigen::MatrixXd M = gauss(n, n);
  s.P0 = M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  s.y = gauss(T, 1);
  return s;
}

/// Median of a copy.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace amh::testing
