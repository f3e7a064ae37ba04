#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Core>

namespace amh {

template <typename Scalar>
struct NelderMeadOptions {
  Scalar reflect = 1.0;
  Scalar expand = 2.0;
  Scalar contract = 0.5;
  Scalar shrink = 0.5;
  /// Offset added to each coordinate of the start point to form the initial simplex.
  Scalar initial_step = 0.05;
  int max_iterations = 2000;
  /// Called with the vertices ordered best first. Defaults to a max vertex
  /// distance from the best vertex of at most 1e-8.
  std::function<bool(const std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>&)> converged;
  /// Optional per-iteration hook: (iteration, best value).
  std::function<void(int, Scalar)> trace;
};

template <typename Scalar>
struct NelderMeadResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  Scalar value{};
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free minimization of `f` from `x0`. Deterministic: ties keep
/// the original vertex order.
template <typename Scalar, typename Objective>
NelderMeadResult<Scalar> nelder_mead_minimize(Objective&& f,
                                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x0,
                                              const NelderMeadOptions<Scalar>& opt = {}) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = x0.size();
  const auto npts = static_cast<std::size_t>(n + 1);

  NelderMeadResult<Scalar> res;
  auto eval = [&](const Vec& x) {
    ++res.evaluations;
    return static_cast<Scalar>(f(x));
  };
  auto converged = [&](const std::vector<Vec>& pts) {
    if (opt.converged) return opt.converged(pts);
    Scalar worst = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) worst = std::max(worst, (pts[i] - pts[0]).norm());
    return worst <= Scalar(1e-8);
  };

  std::vector<Vec> pts(npts, x0);
  std::vector<Scalar> vals(npts);
  for (Eigen::Index i = 0; i < n; ++i) pts[static_cast<std::size_t>(i + 1)][i] += opt.initial_step;
  for (std::size_t i = 0; i < npts; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(npts);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Vec> p2(npts);
    std::vector<Scalar> v2(npts);
    for (std::size_t i = 0; i < npts; ++i) {
      p2[i] = std::move(pts[order[i]]);
      v2[i] = vals[order[i]];
    }
    pts = std::move(p2);
    vals = std::move(v2);
  };

  sort_simplex();
  while (true) {
    if (converged(pts)) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations) break;
    ++res.iterations;

    const std::size_t w = npts - 1;
    Vec centroid = Vec::Zero(n);
    for (std::size_t i = 0; i < w; ++i) centroid += pts[i];
    centroid /= static_cast<Scalar>(n);

    const Vec xr = centroid + opt.reflect * (centroid - pts[w]);
    const Scalar fr = eval(xr);
    bool do_shrink = false;
    if (fr < vals[0]) {
      const Vec xe = centroid + opt.expand * (xr - centroid);
      const Scalar fe = eval(xe);
      if (fe < fr) {
        pts[w] = xe, vals[w] = fe;
      } else {
        pts[w] = xr, vals[w] = fr;
      }
    } else if (fr < vals[w - 1]) {
      pts[w] = xr, vals[w] = fr;
    } else if (fr < vals[w]) {
      const Vec xc = centroid + opt.contract * (xr - centroid);
      const Scalar fc = eval(xc);
      if (fc <= fr) {
        pts[w] = xc, vals[w] = fc;
      } else {
        do_shrink = true;
      }
    } else {
      const Vec xc = centroid + opt.contract * (pts[w] - centroid);
      const Scalar fc = eval(xc);
      if (fc < vals[w]) {
        pts[w] = xc, vals[w] = fc;
      } else {
        do_shrink = true;
      }
    }
    if (do_shrink) {
      for (std::size_t i = 1; i < npts; ++i) {
        pts[i] = pts[0] + opt.shrink * (pts[i] - pts[0]);
        vals[i] = eval(pts[i]);
      }
    }
    sort_simplex();
    if (opt.trace) opt.trace(res.iterations, vals[0]);
  }

  res.x = pts[0];
  res.value = vals[0];
  return res;
}

}  // namespace amh
