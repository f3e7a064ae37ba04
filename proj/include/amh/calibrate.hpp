#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "amh/models.hpp"

namespace amh {

struct FitOptions {
  /// Starting parameters; default_theta() when empty.
  std::optional<Theta> init;
  int max_iterations = 2000;
  /// Stop when every simplex vertex lies within this Euclidean distance of
  /// the best one, measured in natural parameter space.
  double tolerance = 1e-6;
  /// Fresh simplices started from the best point after convergence.
  int max_restarts = 4;
  /// Per-iteration trace sink (null disables tracing).
  std::ostream* trace = nullptr;
};

struct FitResult {
  ModelSpec spec;
  Theta theta;
  double log_lf = 0.0;
  double aic = 0.0;
  /// One per parameter_names(spec) entry; empty where undefined.
  std::vector<std::optional<double>> std_errors;
  std::vector<Date> beta_dates;
  Eigen::VectorXd smoothed_beta;
  Eigen::VectorXd filtered_beta;
  int iterations = 0;
  bool converged = false;
  Index floor_hits = 0;
  FilterOutput<double> filter;
  SmoothedOutput<double> smoothed;
};

/// 2k - 2 log L.
double aic(int k, double log_lf);

/// Starting point: omega = 0.1 var(y), ARCH weights 0.1, b1 = 0.8,
/// sigma2_w = 1e-5, delta = 0, sigma2_eps = var(y).
Theta default_theta(const ModelSpec& spec, const ReturnSeries& data);

/// Maximum-likelihood fit by Nelder-Mead in the unconstrained space.
/// Requires mean-adjusted returns with at least 30 observations.
FitResult fit(const ModelSpec& spec, const ReturnSeries& data, const FitOptions& options = {});

/// Negative log-likelihood as a function of a natural-space parameter vector.
/// Returns +inf outside the constraint set or on numerical failure.
using NaturalObjective = std::function<double(const Eigen::VectorXd&)>;

/// sqrt(diag(H^{-1})) with H the central-difference Hessian of `neg_log_lf`
/// at `theta`, step 1e-4 max(|theta_i|, 1e-4). Parameters whose stencil leaves
/// the feasible region, or whose inverse-Hessian diagonal is not positive,
/// come back empty.
std::vector<std::optional<double>> hessian_standard_errors(const NaturalObjective& neg_log_lf,
                                                           const Eigen::VectorXd& theta,
                                                           Eigen::MatrixXd* hessian = nullptr);

std::vector<std::optional<double>> standard_errors(const ModelSpec& spec, const Theta& theta,
                                                   const ReturnSeries& data);

struct RankingRow {
  ModelSpec spec;
  int k = 0;
  std::optional<FitResult> fit;
  std::string error;
  bool preferred = false;
};

/// Fits every spec independently and sorts the successful rows by AIC
/// (failed rows last, in input order). The lowest AIC is marked preferred.
std::vector<RankingRow> compare_models(const ReturnSeries& data, const std::vector<ModelSpec>& specs,
                                       const FitOptions& options = {});

}  // namespace amh
