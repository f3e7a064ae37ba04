#pragma once

// Linear Kalman filter with a time-varying observation row and variance, a
// control input driven by the filter's own residuals, prediction-error
// decomposition of the Gaussian log-likelihood, and the fixed-interval
// (Rauch-Tung-Striebel) smoother.
//
// State equation:        x_t = F x_{t-1} + B u_{t-1} + G w_t,  w_t ~ N(0, Q)
// Observation equation:  y_t = H_t x_t + eps_t,               eps_t ~ N(0, R_t)
//
// The initial pair (x0, P0) is the distribution of the state one step before
// the first filtered observation, so the first step starts with a time update.

#include <cmath>
#include <concepts>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "amh/errors.hpp"

namespace amh {

using Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct SystemMatrices {
  Matrix<Scalar> F;  ///< n x n transition
  Matrix<Scalar> B;  ///< n x d control loading (d may be 0)
  Matrix<Scalar> G;  ///< n x q noise loading
  Matrix<Scalar> Q;  ///< q x q process-noise covariance

  Index state_dim() const { return F.rows(); }
  Index control_dim() const { return B.cols(); }

  void validate() const {
    const Index n = F.rows();
    if (F.cols() != n || B.rows() != n || G.rows() != n || Q.rows() != G.cols() ||
        Q.cols() != G.cols()) {
      throw std::invalid_argument("system matrices have inconsistent dimensions");
    }
    if (!Q.isApprox(Q.transpose())) throw std::invalid_argument("Q must be symmetric");
  }
};

/// What the observation rule hands the filter at step t.
template <typename Scalar>
struct ObservationStep {
  RowVector<Scalar> H;  ///< 1 x n
  Scalar R{};           ///< observation variance, > 0
  Vector<Scalar> u;     ///< control u_{t-1} applied in the time update into t
};

/// Observation variance returned by a rule, with a flag set when the rule had
/// to floor it.
template <typename Scalar>
struct ObservationVariance {
  Scalar value{};
  bool floored = false;
};

/// A rule producing the time-varying parts of the model from the data and
/// the filter's feedback. `control` writes u_{t-1} given the previous
/// innovation (empty at the first filtered step); `observe` writes H_t and
/// returns R_t given the predicted state x_{t|t-1}.
template <typename M, typename Scalar>
concept ObservationRule =
    requires(const M& m, Index t, std::span<const Scalar> y, std::optional<Scalar> prev_e,
             Eigen::Ref<Vector<Scalar>> u, const Eigen::Ref<const Vector<Scalar>>& x_pred,
             Eigen::Ref<RowVector<Scalar>> h) {
      { m.system() } -> std::convertible_to<const SystemMatrices<Scalar>&>;
      { m.first_step() } -> std::convertible_to<Index>;
      m.control(t, y, prev_e, u);
      { m.observe(t, y, x_pred, h) } -> std::convertible_to<ObservationVariance<Scalar>>;
    };

template <typename Scalar>
struct FilterStep {
  Index t = 0;            ///< index into the data
  Scalar e{};             ///< innovation
  Scalar r_e{};           ///< innovation variance
  Vector<Scalar> gain;    ///< K_t
  Vector<Scalar> x_pred;  ///< x_{t|t-1}
  Matrix<Scalar> P_pred;  ///< P_{t|t-1}
  Vector<Scalar> x_filt;  ///< x_{t|t}
  Matrix<Scalar> P_filt;  ///< P_{t|t}
};

template <typename Scalar>
struct FilterOutput {
  std::vector<FilterStep<Scalar>> steps;
  Scalar log_likelihood{};
  Index floor_hits = 0;

  Index effective_length() const { return static_cast<Index>(steps.size()); }
};

template <typename Scalar>
struct SmoothedOutput {
  std::vector<Index> t;
  std::vector<Vector<Scalar>> x;
  std::vector<Matrix<Scalar>> P;
};

/// Time-invariant observation row and variance, no control input.
template <typename Scalar>
class LinearGaussianModel {
 public:
  LinearGaussianModel(SystemMatrices<Scalar> sys, RowVector<Scalar> H, Scalar R, Index first = 0)
      : sys_(std::move(sys)), H_(std::move(H)), R_(R), first_(first) {
    sys_.validate();
    if (H_.size() != sys_.state_dim()) throw std::invalid_argument("H has wrong length");
    if (!(R_ > Scalar(0))) throw std::invalid_argument("R must be positive");
  }

  const SystemMatrices<Scalar>& system() const { return sys_; }
  Index first_step() const { return first_; }
  void control(Index, std::span<const Scalar>, std::optional<Scalar>,
               Eigen::Ref<Vector<Scalar>>) const {}
  ObservationVariance<Scalar> observe(Index, std::span<const Scalar>,
                                      const Eigen::Ref<const Vector<Scalar>>&,
                                      Eigen::Ref<RowVector<Scalar>> h) const {
    h = H_;
    return {R_, false};
  }

 private:
  SystemMatrices<Scalar> sys_;
  RowVector<Scalar> H_;
  Scalar R_;
  Index first_;
};

namespace detail {

template <typename Scalar>
Scalar log_two_pi() {
  return std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// The filter recursion with the state dimension fixed at compile time when
/// `Dim` is not Dynamic. `sink` sees every step; pass a no-op to get the
/// likelihood alone without allocating per step.
template <int Dim, typename Scalar, typename Model, typename Sink>
std::pair<Scalar, Index> filter_loop(const Model& model, std::span<const Scalar> y,
                                     const Eigen::Ref<const Vector<Scalar>>& x0,
                                     const Eigen::Ref<const Matrix<Scalar>>& P0, Sink&& sink) {
  using StateVec = Eigen::Matrix<Scalar, Dim, 1>;
  using StateRow = Eigen::Matrix<Scalar, 1, Dim>;
  using StateMat = Eigen::Matrix<Scalar, Dim, Dim>;

  const SystemMatrices<Scalar>& sys = model.system();
  const Index n = sys.state_dim();
  const Index d = sys.control_dim();
  if (x0.size() != n || P0.rows() != n || P0.cols() != n) {
    throw std::invalid_argument("initial state has wrong dimension");
  }

  const StateMat F = sys.F;
  const Matrix<Scalar> B = sys.B;
  const StateMat GQG = sys.G * sys.Q * sys.G.transpose();
  const StateMat I = StateMat::Identity(n, n);

  StateVec x = x0;
  StateMat P = P0;
  StateVec x_pred(n);
  StateMat P_pred(n, n);
  StateRow H(n);
  StateVec PHt(n);
  StateVec K(n);
  Vector<Scalar> u(d);

  const Index first = model.first_step();
  const Index T = static_cast<Index>(y.size());
  if (first < 0 || first >= T) throw std::invalid_argument("no observations to filter");

  std::optional<Scalar> prev_e;
  Scalar sum = 0;
  Index floor_hits = 0;
  for (Index t = first; t < T; ++t) {
    // Time update into t.
    x_pred.noalias() = F * x;
    if (d > 0) {
      model.control(t, y, prev_e, u);
      x_pred.noalias() += B * u;
    }
    P_pred.noalias() = F * P * F.transpose();
    P_pred += GQG;
    P_pred = Scalar(0.5) * (P_pred + P_pred.transpose()).eval();

    // Measurement update at t.
    const ObservationVariance<Scalar> R = model.observe(t, y, x_pred, H);
    if (R.floored) ++floor_hits;
    const Scalar e = y[static_cast<std::size_t>(t)] - H.dot(x_pred);
    PHt.noalias() = P_pred * H.transpose();
    const Scalar r_e = H.dot(PHt) + R.value;
    if (!(r_e > Scalar(0)) || !std::isfinite(r_e) || !std::isfinite(e)) {
      throw NumericalFailure(t, "innovation variance not positive and finite");
    }
    K = PHt / r_e;
    x.noalias() = x_pred + K * e;
    P.noalias() = (I - K * H) * P_pred;
    P = Scalar(0.5) * (P + P.transpose()).eval();
    if (!all_finite(x) || !all_finite(P)) throw NumericalFailure(t, "non-finite state");

    sum += std::log(r_e) + e * e / r_e;
    sink(t, e, r_e, K, x_pred, P_pred, x, P);
    prev_e = e;
  }

  const Index t_eff = T - first;
  const Scalar ll = -Scalar(0.5) * static_cast<Scalar>(t_eff) * log_two_pi<Scalar>() - Scalar(0.5) * sum;
  if (!std::isfinite(ll)) throw NumericalFailure(T - 1, "non-finite log-likelihood");
  return {ll, floor_hits};
}

template <typename Scalar, typename Fn>
decltype(auto) dispatch_dim(Index n, Fn&& fn) {
  switch (n) {
    case 1: return fn(std::integral_constant<int, 1>{});
    case 2: return fn(std::integral_constant<int, 2>{});
    case 3: return fn(std::integral_constant<int, 3>{});
    default: return fn(std::integral_constant<int, Eigen::Dynamic>{});
  }
}

}  // namespace detail

/// Runs the filter and keeps every step.
template <typename Scalar, ObservationRule<Scalar> Model>
FilterOutput<Scalar> run_filter(const Model& model, std::span<const Scalar> y,
                                const Eigen::Ref<const Vector<Scalar>>& x0,
                                const Eigen::Ref<const Matrix<Scalar>>& P0) {
  FilterOutput<Scalar> out;
  out.steps.reserve(y.size());
  auto sink = [&out](Index t, Scalar e, Scalar r_e, const auto& K, const auto& xp, const auto& Pp,
                     const auto& xf, const auto& Pf) {
    out.steps.push_back(FilterStep<Scalar>{t, e, r_e, K, xp, Pp, xf, Pf});
  };
  const auto [ll, hits] = detail::dispatch_dim<Scalar>(
      model.system().state_dim(), [&](auto dim) {
        return detail::filter_loop<decltype(dim)::value, Scalar>(model, y, x0, P0, sink);
      });
  out.log_likelihood = ll;
  out.floor_hits = hits;
  return out;
}

/// Log-likelihood only; no per-step storage. Returns (log-likelihood, floor hits).
template <typename Scalar, ObservationRule<Scalar> Model>
std::pair<Scalar, Index> filter_log_likelihood(const Model& model, std::span<const Scalar> y,
                                               const Eigen::Ref<const Vector<Scalar>>& x0,
                                               const Eigen::Ref<const Matrix<Scalar>>& P0) {
  auto sink = [](Index, Scalar, Scalar, const auto&, const auto&, const auto&, const auto&,
                 const auto&) {};
  return detail::dispatch_dim<Scalar>(model.system().state_dim(), [&](auto dim) {
    return detail::filter_loop<decltype(dim)::value, Scalar>(model, y, x0, P0, sink);
  });
}

/// One step's contribution to the log-likelihood.
template <typename Scalar>
Scalar log_likelihood_term(Scalar e, Scalar r_e) {
  return -Scalar(0.5) * (detail::log_two_pi<Scalar>() + std::log(r_e) + e * e / r_e);
}

/// Prediction-error decomposition:
/// -(T/2) ln 2pi - 1/2 sum_t [ln R_{e,t} + e_t^2 / R_{e,t}] over the filtered steps.
template <typename Scalar>
Scalar log_likelihood(const FilterOutput<Scalar>& fo) {
  Scalar sum = 0;
  for (const auto& s : fo.steps) sum += log_likelihood_term(s.e, s.r_e);
  return sum;
}

/// Fixed-interval smoother over a completed filter run.
template <typename Scalar>
SmoothedOutput<Scalar> rts_smooth(const FilterOutput<Scalar>& fo, const SystemMatrices<Scalar>& sys) {
  SmoothedOutput<Scalar> out;
  const std::size_t T = fo.steps.size();
  if (T == 0) return out;
  const Index n = sys.state_dim();
  for (const auto& s : fo.steps) {
    if (s.x_filt.size() != n || s.P_filt.rows() != n || s.P_pred.rows() != n) {
      throw std::invalid_argument("filter output does not match system dimension");
    }
  }

  out.t.resize(T);
  out.x.resize(T);
  out.P.resize(T);
  out.t[T - 1] = fo.steps[T - 1].t;
  out.x[T - 1] = fo.steps[T - 1].x_filt;
  out.P[T - 1] = fo.steps[T - 1].P_filt;

  for (std::size_t k = T - 1; k-- > 0;) {
    const auto& cur = fo.steps[k];
    const auto& next = fo.steps[k + 1];
    const Matrix<Scalar> pinv =
        Eigen::CompleteOrthogonalDecomposition<Matrix<Scalar>>(next.P_pred).pseudoInverse();
    const Matrix<Scalar> C = cur.P_filt * sys.F.transpose() * pinv;
    out.t[k] = cur.t;
    out.x[k] = cur.x_filt + C * (out.x[k + 1] - next.x_pred);
    Matrix<Scalar> P = cur.P_filt + C * (out.P[k + 1] - next.P_pred) * C.transpose();
    out.P[k] = Scalar(0.5) * (P + P.transpose());
  }
  return out;
}

}  // namespace amh
