#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "amh/ingest.hpp"
#include "amh/statespace.hpp"

namespace amh {

/// The five time-varying AR specifications. Every GARCH kind is an AR(1)
/// with a random-walk coefficient and a GARCH(1,1)-type variance.
enum class ModelKind { TVAR, GARCH11, GARCH_M, T_GARCH, A_GARCH };

struct ModelSpec {
  ModelKind kind = ModelKind::TVAR;
  int ar_order = 1;  ///< TVAR only

  bool operator==(const ModelSpec&) const = default;
};

/// Named parameters. Only the fields relevant to the spec's kind are used:
///   TVAR(n):  sigma2_w[0..n), sigma2_eps
///   GARCH11:  omega, a1, b1, sigma2_w[0]
///   GARCH_M:  omega, a1, b1, delta, sigma2_w[0]
///   T_GARCH:  omega, a1_plus, a1_minus, b1, sigma2_w[0]
///   A_GARCH:  omega, a1, a1_plus, b1, sigma2_w[0]
struct Theta {
  double omega = 0.0;
  double a1 = 0.0;
  double b1 = 0.0;
  double a1_plus = 0.0;
  double a1_minus = 0.0;
  double delta = 0.0;
  std::vector<double> sigma2_w;
  double sigma2_eps = 0.0;
};

/// Observation variances below this are floored (and counted).
inline constexpr double kVarianceFloor = 1e-12;

/// Short CLI name: tvar, garch, garchm, tgarch, agarch.
std::string model_name(const ModelSpec& spec);
/// Human-readable label, e.g. "GARCH-M(1,1)" or "TVAR(2)".
std::string model_label(const ModelSpec& spec);
/// Inverse of model_name; throws std::invalid_argument listing the valid names.
ModelSpec parse_model_name(std::string_view name, int ar_order = 1);
/// The fixed five-model set compared by AIC (TVAR(1) and the four GARCH kinds).
std::vector<ModelSpec> standard_specs();

/// Number of estimated parameters (the k in AIC).
int parameter_count(const ModelSpec& spec);
std::vector<std::string> parameter_names(const ModelSpec& spec);

/// Natural-space parameter vector in parameter_names order.
Eigen::VectorXd to_natural(const ModelSpec& spec, const Theta& theta);
Theta from_natural(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Sum of ARCH weights plus b1 that must stay below one (GARCH kinds only).
double persistence(const ModelSpec& spec, const Theta& theta);

/// Throws std::invalid_argument naming the first field that breaks its
/// sign or stationarity constraint.
void validate(const ModelSpec& spec, const Theta& theta);
bool satisfies_constraints(const ModelSpec& spec, const Theta& theta);

/// Bijection between the interior of the constraint set and R^p.
/// Positive parameters go through log; the ARCH/GARCH weights through a
/// softmax with an implicit zero logit, so their weighted sum stays below one.
Eigen::VectorXd theta_to_unconstrained(const ModelSpec& spec, const Theta& theta);
Theta unconstrained_to_theta(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v);

/// A model bound to its parameters: fixed system matrices plus the rule that
/// produces H_t, R_t and u_{t-1} from the data and the filter's residuals.
///
/// GARCH kinds carry the state [h_t, beta_t] with F = diag(b1, 1),
/// G = [0, 1]^T, Q = [sigma2_w]; R_t is the predicted h_{t|t-1}, and the
/// control input feeds back the previous squared innovation. TVAR(n) carries
/// [beta_1..beta_n] with F = I, Q = diag(sigma2_w), R = sigma2_eps and no
/// control.
class ModelInstance {
 public:
  ModelInstance(ModelSpec spec, Theta theta);

  const ModelSpec& spec() const { return spec_; }
  const Theta& theta() const { return theta_; }
  const SystemMatrices<double>& system() const { return sys_; }

  /// First data index with every lag the observation row needs.
  Index first_step() const { return spec_.kind == ModelKind::TVAR ? spec_.ar_order : 1; }
  /// Position of beta_1 in the state vector.
  Index beta_index() const { return spec_.kind == ModelKind::TVAR ? 0 : 1; }

  void control(Index t, std::span<const double> y, std::optional<double> prev_e,
               Eigen::Ref<Vector<double>> u) const;
  ObservationVariance<double> observe(Index t, std::span<const double> y,
                                      const Eigen::Ref<const Vector<double>>& x_pred,
                                      Eigen::Ref<RowVector<double>> h) const;

  /// Materialized (H_t, R_t, u_{t-1}) for inspection.
  ObservationStep<double> step(Index t, std::span<const double> y, std::optional<double> prev_e,
                               const Eigen::Ref<const Vector<double>>& x_pred) const;

 private:
  ModelSpec spec_;
  Theta theta_;
  SystemMatrices<double> sys_;
};

ModelInstance build_model(const ModelSpec& spec, const Theta& theta);

struct InitialState {
  Eigen::VectorXd x0;
  Eigen::MatrixXd P0;
};

/// GARCH kinds: x0 = [h0, 0] with h0 the sample variance of the returns and
/// P0 = diag(0, 1), so the variance component is never moved by the
/// measurement update. TVAR: x0 = 0, P0 = I.
InitialState default_initial_state(const ModelSpec& spec, const ReturnSeries& data);

/// Full filter run of `model` over the returns from the default initial state.
FilterOutput<double> filter_returns(const ModelInstance& model, const ReturnSeries& data);
/// Log-likelihood at theta from the default initial state (no per-step storage).
double log_likelihood_at(const ModelSpec& spec, const Theta& theta, const ReturnSeries& data);

}  // namespace amh
