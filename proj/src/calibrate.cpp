#include "amh/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "amh/errors.hpp"
#include "amh/nelder_mead.hpp"

namespace amh {

namespace {

// Objective assigned to probes where the filter fails (log-likelihood -1e12).
constexpr double kPenalty = 1e12;

double sample_variance(const ReturnSeries& data) {
  const Eigen::ArrayXd c = data.values.array() - data.values.mean();
  return c.square().sum() / static_cast<double>(data.size() - 1);
}

double negative_log_lf(const ModelSpec& spec, const Theta& theta, const ReturnSeries& data) {
  if (!satisfies_constraints(spec, theta)) return kPenalty;
  try {
    const double ll = log_likelihood_at(spec, theta, data);
    return std::isfinite(ll) ? -ll : kPenalty;
  } catch (const NumericalFailure&) {
    return kPenalty;
  }
}

}  // namespace

double aic(int k, double log_lf) { return 2.0 * k - 2.0 * log_lf; }

Theta default_theta(const ModelSpec& spec, const ReturnSeries& data) {
  const double var = sample_variance(data);
  Theta th;
  if (spec.kind == ModelKind::TVAR) {
    th.sigma2_w.assign(static_cast<std::size_t>(spec.ar_order), 1e-5);
    th.sigma2_eps = var;
    return th;
  }
  th.omega = 0.1 * var;
  th.a1 = th.a1_plus = th.a1_minus = 0.1;
  th.b1 = 0.8;
  th.delta = 0.0;
  th.sigma2_w = {1e-5};
  return th;
}

FitResult fit(const ModelSpec& spec, const ReturnSeries& data, const FitOptions& options) {
  if (!data.mean_adjusted) throw std::invalid_argument("fit requires mean-adjusted returns");
  if (data.size() < 30) throw std::invalid_argument("fit requires at least 30 returns");

  const Theta start = options.init.value_or(default_theta(spec, data));
  validate(spec, start);

  auto objective = [&](const Eigen::VectorXd& v) {
    return negative_log_lf(spec, unconstrained_to_theta(spec, v), data);
  };

  NelderMeadOptions<double> nm;
  nm.initial_step = 0.05;
  nm.converged = [&](const std::vector<Eigen::VectorXd>& pts) {
    const Eigen::VectorXd best = to_natural(spec, unconstrained_to_theta(spec, pts[0]));
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const Eigen::VectorXd other = to_natural(spec, unconstrained_to_theta(spec, pts[i]));
      if ((other - best).norm() > options.tolerance) return false;
    }
    return true;
  };
  if (options.trace) {
    nm.trace = [&](int it, double best) {
      *options.trace << "[" << model_name(spec) << "] iter " << it << " log_lf " << -best << '\n';
    };
  }

  Eigen::VectorXd x = theta_to_unconstrained(spec, start);
  double best = objective(x);
  int iterations = 0;
  bool converged = false;
  for (int round = 0; round <= options.max_restarts; ++round) {
    nm.max_iterations = options.max_iterations - iterations;
    const NelderMeadResult<double> r = nelder_mead_minimize<double>(objective, x, nm);
    iterations += r.iterations;
    const double gain = best - r.value;
    if (r.value <= best) {
      x = r.x;
      best = r.value;
    }
    converged = r.converged;
    if (!r.converged || gain <= 1e-9) break;
  }
  if (!(best < kPenalty)) {
    throw FitFailure("likelihood could not be evaluated for " + model_label(spec));
  }

  FitResult res;
  res.spec = spec;
  res.theta = unconstrained_to_theta(spec, x);
  res.iterations = iterations;
  res.converged = converged;

  const ModelInstance model(spec, res.theta);
  res.filter = filter_returns(model, data);
  res.log_lf = res.filter.log_likelihood;
  res.aic = aic(parameter_count(spec), res.log_lf);
  res.floor_hits = res.filter.floor_hits;
  res.smoothed = rts_smooth(res.filter, model.system());

  const auto T = res.filter.steps.size();
  res.beta_dates.reserve(T);
  res.smoothed_beta.resize(static_cast<Index>(T));
  res.filtered_beta.resize(static_cast<Index>(T));
  for (std::size_t k = 0; k < T; ++k) {
    const auto i = static_cast<Index>(k);
    res.beta_dates.push_back(data.dates[static_cast<std::size_t>(res.filter.steps[k].t)]);
    res.smoothed_beta[i] = res.smoothed.x[k][model.beta_index()];
    res.filtered_beta[i] = res.filter.steps[k].x_filt[model.beta_index()];
  }
  res.std_errors = standard_errors(spec, res.theta, data);
  return res;
}

std::vector<std::optional<double>> hessian_standard_errors(const NaturalObjective& f,
                                                           const Eigen::VectorXd& theta,
                                                           Eigen::MatrixXd* hessian) {
  const Index p = theta.size();
  std::vector<std::optional<double>> out(static_cast<std::size_t>(p));
  const double f0 = f(theta);
  if (!std::isfinite(f0)) return out;

  Eigen::VectorXd h(p);
  for (Index i = 0; i < p; ++i) h[i] = 1e-4 * std::max(std::abs(theta[i]), 1e-4);

  auto at = [&](Index i, double si, Index j, double sj) {
    Eigen::VectorXd x = theta;
    x[i] += si * h[i];
    if (j >= 0) x[j] += sj * h[j];
    return f(x);
  };

  std::vector<bool> usable(static_cast<std::size_t>(p), true);
  Eigen::MatrixXd H = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::quiet_NaN());
  for (Index i = 0; i < p; ++i) {
    const double fp = at(i, 1, -1, 0);
    const double fm = at(i, -1, -1, 0);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      usable[static_cast<std::size_t>(i)] = false;
      continue;
    }
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
  }
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      if (!usable[static_cast<std::size_t>(i)] || !usable[static_cast<std::size_t>(j)]) continue;
      const double fpp = at(i, 1, j, 1);
      const double fpm = at(i, 1, j, -1);
      const double fmp = at(i, -1, j, 1);
      const double fmm = at(i, -1, j, -1);
      const double v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
      if (!std::isfinite(v)) {
        usable[static_cast<std::size_t>(j)] = false;
        continue;
      }
      H(i, j) = H(j, i) = v;
    }
  }
  if (hessian) *hessian = H;

  std::vector<Index> idx;
  for (Index i = 0; i < p; ++i) {
    if (usable[static_cast<std::size_t>(i)]) idx.push_back(i);
  }
  if (idx.empty()) return out;
  const auto m = static_cast<Index>(idx.size());
  Eigen::MatrixXd sub(m, m);
  for (Index a = 0; a < m; ++a) {
    for (Index b = 0; b < m; ++b) sub(a, b) = H(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  }

  Eigen::MatrixXd inv;
  const Eigen::LLT<Eigen::MatrixXd> llt(sub);
  if (llt.info() == Eigen::Success) {
    inv = llt.solve(Eigen::MatrixXd::Identity(m, m));
  } else {
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (!lu.isInvertible()) return out;
    inv = lu.inverse();
  }
  for (Index a = 0; a < m; ++a) {
    const double d = inv(a, a);
    if (std::isfinite(d) && d > 0.0) out[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] = std::sqrt(d);
  }
  return out;
}

std::vector<std::optional<double>> standard_errors(const ModelSpec& spec, const Theta& theta,
                                                   const ReturnSeries& data) {
  const NaturalObjective f = [&](const Eigen::VectorXd& v) {
    const Theta th = from_natural(spec, v);
    if (!satisfies_constraints(spec, th)) return std::numeric_limits<double>::infinity();
    try {
      const double ll = log_likelihood_at(spec, th, data);
      return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
    } catch (const NumericalFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  return hessian_standard_errors(f, to_natural(spec, theta));
}

std::vector<RankingRow> compare_models(const ReturnSeries& data, const std::vector<ModelSpec>& specs,
                                       const FitOptions& options) {
  if (specs.size() < 2) throw std::invalid_argument("compare_models needs at least 2 specs");

  std::vector<std::future<FitResult>> jobs;
  jobs.reserve(specs.size());
  for (const ModelSpec& spec : specs) {
    jobs.push_back(std::async(std::launch::async, [&data, &options, spec] { return fit(spec, data, options); }));
  }

  std::vector<RankingRow> rows;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    RankingRow row;
    row.spec = specs[i];
    row.k = parameter_count(specs[i]);
    try {
      row.fit = jobs[i].get();
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }

  std::stable_sort(rows.begin(), rows.end(), [](const RankingRow& a, const RankingRow& b) {
    if (a.fit.has_value() != b.fit.has_value()) return a.fit.has_value();
    if (!a.fit) return false;
    return a.fit->aic < b.fit->aic;
  });
  if (!rows.empty() && rows.front().fit) rows.front().preferred = true;
  return rows;
}

}  // namespace amh
