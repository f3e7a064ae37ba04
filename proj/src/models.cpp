#include "amh/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace amh {

namespace {

// Logit and log-scale clamps keep every image of R^p strictly inside the
// constraint set in double precision.
constexpr double kLogitClamp = 30.0;
constexpr double kLogClamp = 700.0;

bool is_garch(ModelKind k) { return k != ModelKind::TVAR; }

double clamp_log(double v) { return std::exp(std::clamp(v, -kLogClamp, kLogClamp)); }

/// Weights w_i = e^{c_i} / (1 + sum_j e^{c_j}), evaluated stably.
template <std::size_t N>
std::array<double, N> simplex_weights(const std::array<double, N>& logits) {
  std::array<double, N> c{};
  double top = 0.0;  // the implicit zero logit
  for (std::size_t i = 0; i < N; ++i) {
    c[i] = std::clamp(logits[i], -kLogitClamp, kLogitClamp);
    top = std::max(top, c[i]);
  }
  double denom = std::exp(-top);
  for (double ci : c) denom += std::exp(ci - top);
  std::array<double, N> w{};
  for (std::size_t i = 0; i < N; ++i) w[i] = std::exp(c[i] - top) / denom;
  return w;
}

template <std::size_t N>
std::array<double, N> simplex_logits(const std::array<double, N>& w, const char* what) {
  double rest = 1.0;
  for (double wi : w) rest -= wi;
  if (!(rest > 0.0)) throw std::invalid_argument(std::string(what) + " is on the stationarity boundary");
  std::array<double, N> c{};
  for (std::size_t i = 0; i < N; ++i) c[i] = std::log(w[i] / rest);
  return c;
}

double positive_log(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be strictly positive for the transform");
  }
  return std::log(value);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

std::string model_name(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::TVAR: return "tvar";
    case ModelKind::GARCH11: return "garch";
    case ModelKind::GARCH_M: return "garchm";
    case ModelKind::T_GARCH: return "tgarch";
    case ModelKind::A_GARCH: return "agarch";
  }
  return "unknown";
}

std::string model_label(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::TVAR: return "TVAR(" + std::to_string(spec.ar_order) + ")";
    case ModelKind::GARCH11: return "GARCH(1,1)";
    case ModelKind::GARCH_M: return "GARCH-M(1,1)";
    case ModelKind::T_GARCH: return "T-GARCH(1,1)";
    case ModelKind::A_GARCH: return "A-GARCH(1,1)";
  }
  return "unknown";
}

ModelSpec parse_model_name(std::string_view name, int ar_order) {
  if (ar_order < 1) throw std::invalid_argument("ar order must be >= 1");
  if (name == "tvar") return {ModelKind::TVAR, ar_order};
  if (name == "garch") return {ModelKind::GARCH11, 1};
  if (name == "garchm") return {ModelKind::GARCH_M, 1};
  if (name == "tgarch") return {ModelKind::T_GARCH, 1};
  if (name == "agarch") return {ModelKind::A_GARCH, 1};
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "'; expected one of: tvar, garch, garchm, tgarch, agarch");
}

std::vector<ModelSpec> standard_specs() {
  return {{ModelKind::TVAR, 1},
          {ModelKind::GARCH11, 1},
          {ModelKind::T_GARCH, 1},
          {ModelKind::A_GARCH, 1},
          {ModelKind::GARCH_M, 1}};
}

int parameter_count(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::TVAR: return spec.ar_order + 1;
    case ModelKind::GARCH11: return 4;
    default: return 5;
  }
}

std::vector<std::string> parameter_names(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::TVAR: {
      std::vector<std::string> names;
      for (int i = 1; i <= spec.ar_order; ++i) {
        names.push_back(spec.ar_order == 1 ? "sigma2_w" : "sigma2_w" + std::to_string(i));
      }
      names.push_back("sigma2_eps");
      return names;
    }
    case ModelKind::GARCH11: return {"omega", "a1", "b1", "sigma2_w"};
    case ModelKind::GARCH_M: return {"omega", "a1", "b1", "delta", "sigma2_w"};
    case ModelKind::T_GARCH: return {"omega", "a1_plus", "a1_minus", "b1", "sigma2_w"};
    case ModelKind::A_GARCH: return {"omega", "a1", "a1_plus", "b1", "sigma2_w"};
  }
  return {};
}

Eigen::VectorXd to_natural(const ModelSpec& spec, const Theta& th) {
  const auto w = [&](std::size_t i) { return i < th.sigma2_w.size() ? th.sigma2_w[i] : 0.0; };
  Eigen::VectorXd v(parameter_count(spec));
  switch (spec.kind) {
    case ModelKind::TVAR:
      for (int i = 0; i < spec.ar_order; ++i) v[i] = w(static_cast<std::size_t>(i));
      v[spec.ar_order] = th.sigma2_eps;
      break;
    case ModelKind::GARCH11: v << th.omega, th.a1, th.b1, w(0); break;
    case ModelKind::GARCH_M: v << th.omega, th.a1, th.b1, th.delta, w(0); break;
    case ModelKind::T_GARCH: v << th.omega, th.a1_plus, th.a1_minus, th.b1, w(0); break;
    case ModelKind::A_GARCH: v << th.omega, th.a1, th.a1_plus, th.b1, w(0); break;
  }
  return v;
}

Theta from_natural(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != parameter_count(spec)) throw std::invalid_argument("parameter vector has wrong length");
  Theta th;
  switch (spec.kind) {
    case ModelKind::TVAR:
      th.sigma2_w.assign(v.data(), v.data() + spec.ar_order);
      th.sigma2_eps = v[spec.ar_order];
      break;
    case ModelKind::GARCH11:
      th.omega = v[0], th.a1 = v[1], th.b1 = v[2], th.sigma2_w = {v[3]};
      break;
    case ModelKind::GARCH_M:
      th.omega = v[0], th.a1 = v[1], th.b1 = v[2], th.delta = v[3], th.sigma2_w = {v[4]};
      break;
    case ModelKind::T_GARCH:
      th.omega = v[0], th.a1_plus = v[1], th.a1_minus = v[2], th.b1 = v[3], th.sigma2_w = {v[4]};
      break;
    case ModelKind::A_GARCH:
      th.omega = v[0], th.a1 = v[1], th.a1_plus = v[2], th.b1 = v[3], th.sigma2_w = {v[4]};
      break;
  }
  return th;
}

double persistence(const ModelSpec& spec, const Theta& th) {
  switch (spec.kind) {
    case ModelKind::TVAR: return 0.0;
    case ModelKind::GARCH11:
    case ModelKind::GARCH_M: return th.a1 + th.b1;
    case ModelKind::T_GARCH: return 0.5 * (th.a1_plus + th.a1_minus) + th.b1;
    case ModelKind::A_GARCH: return th.a1 + 0.5 * th.a1_plus + th.b1;
  }
  return 0.0;
}

void validate(const ModelSpec& spec, const Theta& th) {
  require(spec.ar_order >= 1, "ar_order must be >= 1");
  const auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };

  if (spec.kind == ModelKind::TVAR) {
    require(static_cast<int>(th.sigma2_w.size()) == spec.ar_order,
            "sigma2_w must have " + std::to_string(spec.ar_order) + " entries");
    for (double s : th.sigma2_w) require(nonneg(s), "sigma2_w must be >= 0");
    require(std::isfinite(th.sigma2_eps) && th.sigma2_eps > 0.0, "sigma2_eps must be > 0");
    return;
  }

  require(th.sigma2_w.size() == 1, "sigma2_w must have exactly 1 entry");
  require(nonneg(th.sigma2_w[0]), "sigma2_w must be >= 0");
  require(std::isfinite(th.omega) && th.omega > 0.0, "omega must be > 0");
  require(nonneg(th.b1), "b1 must be >= 0");
  switch (spec.kind) {
    case ModelKind::GARCH_M:
      require(std::isfinite(th.delta), "delta must be finite");
      [[fallthrough]];
    case ModelKind::GARCH11:
      require(nonneg(th.a1), "a1 must be >= 0");
      require(persistence(spec, th) < 1.0, "stationarity violated: a1 + b1 must be < 1");
      break;
    case ModelKind::T_GARCH:
      require(nonneg(th.a1_plus), "a1_plus must be >= 0");
      require(nonneg(th.a1_minus), "a1_minus must be >= 0");
      require(persistence(spec, th) < 1.0,
              "stationarity violated: (a1_plus + a1_minus)/2 + b1 must be < 1");
      break;
    case ModelKind::A_GARCH:
      require(nonneg(th.a1), "a1 must be >= 0");
      require(nonneg(th.a1_plus), "a1_plus must be >= 0");
      require(persistence(spec, th) < 1.0, "stationarity violated: a1 + a1_plus/2 + b1 must be < 1");
      break;
    case ModelKind::TVAR: break;
  }
}

bool satisfies_constraints(const ModelSpec& spec, const Theta& theta) {
  try {
    validate(spec, theta);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

Eigen::VectorXd theta_to_unconstrained(const ModelSpec& spec, const Theta& th) {
  validate(spec, th);
  Eigen::VectorXd v(parameter_count(spec));
  switch (spec.kind) {
    case ModelKind::TVAR:
      for (int i = 0; i < spec.ar_order; ++i) v[i] = positive_log(th.sigma2_w[static_cast<std::size_t>(i)], "sigma2_w");
      v[spec.ar_order] = positive_log(th.sigma2_eps, "sigma2_eps");
      return v;
    case ModelKind::GARCH11:
    case ModelKind::GARCH_M: {
      require(th.a1 > 0.0, "a1 must be > 0 for the transform");
      require(th.b1 > 0.0, "b1 must be > 0 for the transform");
      const auto c = simplex_logits<2>({th.a1, th.b1}, "a1 + b1");
      if (spec.kind == ModelKind::GARCH11) {
        v << positive_log(th.omega, "omega"), c[0], c[1], positive_log(th.sigma2_w[0], "sigma2_w");
      } else {
        v << positive_log(th.omega, "omega"), c[0], c[1], th.delta, positive_log(th.sigma2_w[0], "sigma2_w");
      }
      return v;
    }
    case ModelKind::T_GARCH: {
      require(th.a1_plus > 0.0, "a1_plus must be > 0 for the transform");
      require(th.a1_minus > 0.0, "a1_minus must be > 0 for the transform");
      require(th.b1 > 0.0, "b1 must be > 0 for the transform");
      const auto c = simplex_logits<3>({0.5 * th.a1_plus, 0.5 * th.a1_minus, th.b1}, "persistence");
      v << positive_log(th.omega, "omega"), c[0], c[1], c[2], positive_log(th.sigma2_w[0], "sigma2_w");
      return v;
    }
    case ModelKind::A_GARCH: {
      require(th.a1 > 0.0, "a1 must be > 0 for the transform");
      require(th.a1_plus > 0.0, "a1_plus must be > 0 for the transform");
      require(th.b1 > 0.0, "b1 must be > 0 for the transform");
      const auto c = simplex_logits<3>({th.a1, 0.5 * th.a1_plus, th.b1}, "persistence");
      v << positive_log(th.omega, "omega"), c[0], c[1], c[2], positive_log(th.sigma2_w[0], "sigma2_w");
      return v;
    }
  }
  return v;
}

Theta unconstrained_to_theta(const ModelSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != parameter_count(spec)) throw std::invalid_argument("parameter vector has wrong length");
  Theta th;
  switch (spec.kind) {
    case ModelKind::TVAR:
      for (int i = 0; i < spec.ar_order; ++i) th.sigma2_w.push_back(clamp_log(v[i]));
      th.sigma2_eps = clamp_log(v[spec.ar_order]);
      break;
    case ModelKind::GARCH11:
    case ModelKind::GARCH_M: {
      const auto w = simplex_weights<2>({v[1], v[2]});
      th.omega = clamp_log(v[0]);
      th.a1 = w[0];
      th.b1 = w[1];
      if (spec.kind == ModelKind::GARCH_M) {
        th.delta = v[3];
        th.sigma2_w = {clamp_log(v[4])};
      } else {
        th.sigma2_w = {clamp_log(v[3])};
      }
      break;
    }
    case ModelKind::T_GARCH: {
      const auto w = simplex_weights<3>({v[1], v[2], v[3]});
      th.omega = clamp_log(v[0]);
      th.a1_plus = 2.0 * w[0];
      th.a1_minus = 2.0 * w[1];
      th.b1 = w[2];
      th.sigma2_w = {clamp_log(v[4])};
      break;
    }
    case ModelKind::A_GARCH: {
      const auto w = simplex_weights<3>({v[1], v[2], v[3]});
      th.omega = clamp_log(v[0]);
      th.a1 = w[0];
      th.a1_plus = 2.0 * w[1];
      th.b1 = w[2];
      th.sigma2_w = {clamp_log(v[4])};
      break;
    }
  }
  return th;
}

ModelInstance::ModelInstance(ModelSpec spec, Theta theta) : spec_(spec), theta_(std::move(theta)) {
  validate(spec_, theta_);
  if (spec_.kind == ModelKind::TVAR) {
    const Index n = spec_.ar_order;
    sys_.F = Matrix<double>::Identity(n, n);
    sys_.B = Matrix<double>::Zero(n, 0);
    sys_.G = Matrix<double>::Identity(n, n);
    sys_.Q = Eigen::Map<const Eigen::VectorXd>(theta_.sigma2_w.data(), n).asDiagonal();
    return;
  }

  sys_.F = Matrix<double>::Identity(2, 2);
  sys_.F(0, 0) = theta_.b1;
  sys_.G = Matrix<double>::Zero(2, 1);
  sys_.G(1, 0) = 1.0;
  sys_.Q = Matrix<double>::Constant(1, 1, theta_.sigma2_w[0]);
  switch (spec_.kind) {
    case ModelKind::GARCH11:
    case ModelKind::GARCH_M:
      sys_.B = Matrix<double>::Zero(2, 2);
      sys_.B(0, 0) = theta_.omega;
      sys_.B(0, 1) = theta_.a1;
      break;
    case ModelKind::T_GARCH:
      sys_.B = Matrix<double>::Zero(2, 3);
      sys_.B(0, 0) = theta_.omega;
      sys_.B(0, 1) = theta_.a1_plus;
      sys_.B(0, 2) = theta_.a1_minus;
      break;
    case ModelKind::A_GARCH:
      sys_.B = Matrix<double>::Zero(2, 3);
      sys_.B(0, 0) = theta_.omega;
      sys_.B(0, 1) = theta_.a1;
      sys_.B(0, 2) = theta_.a1_plus;
      break;
    case ModelKind::TVAR: break;
  }
}

void ModelInstance::control(Index t, std::span<const double> y, std::optional<double> prev_e,
                            Eigen::Ref<Vector<double>> u) const {
  if (!is_garch(spec_.kind)) return;
  // No residual exists before the first filtered step; the previous return
  // stands in for it (a zero beta prior).
  const double e = prev_e.value_or(y[static_cast<std::size_t>(t - 1)]);
  const double e2 = e * e;
  u[0] = 1.0;
  switch (spec_.kind) {
    case ModelKind::GARCH11:
    case ModelKind::GARCH_M: u[1] = e2; break;
    case ModelKind::T_GARCH:
      u[1] = e > 0.0 ? e2 : 0.0;
      u[2] = e < 0.0 ? e2 : 0.0;
      break;
    case ModelKind::A_GARCH: {
      const double pos = std::max(e, 0.0);
      u[1] = e2;
      u[2] = pos * pos;
      break;
    }
    case ModelKind::TVAR: break;
  }
}

ObservationVariance<double> ModelInstance::observe(Index t, std::span<const double> y,
                                                   const Eigen::Ref<const Vector<double>>& x_pred,
                                                   Eigen::Ref<RowVector<double>> h) const {
  const auto lag = [&](Index k) { return y[static_cast<std::size_t>(t - k)]; };
  if (spec_.kind == ModelKind::TVAR) {
    for (Index i = 0; i < spec_.ar_order; ++i) h[i] = lag(i + 1);
    return {theta_.sigma2_eps, false};
  }
  h[0] = spec_.kind == ModelKind::GARCH_M ? theta_.delta : 0.0;
  h[1] = lag(1);
  const double variance = x_pred[0];
  if (!(variance >= kVarianceFloor)) return {kVarianceFloor, true};
  return {variance, false};
}

ObservationStep<double> ModelInstance::step(Index t, std::span<const double> y,
                                            std::optional<double> prev_e,
                                            const Eigen::Ref<const Vector<double>>& x_pred) const {
  ObservationStep<double> s;
  s.H.resize(sys_.state_dim());
  s.u.resize(sys_.control_dim());
  control(t, y, prev_e, s.u);
  s.R = observe(t, y, x_pred, s.H).value;
  return s;
}

ModelInstance build_model(const ModelSpec& spec, const Theta& theta) { return ModelInstance(spec, theta); }

InitialState default_initial_state(const ModelSpec& spec, const ReturnSeries& data) {
  InitialState init;
  if (spec.kind == ModelKind::TVAR) {
    init.x0 = Eigen::VectorXd::Zero(spec.ar_order);
    init.P0 = Eigen::MatrixXd::Identity(spec.ar_order, spec.ar_order);
    return init;
  }
  const Eigen::Index n = data.size();
  if (n < 2) throw std::invalid_argument("need at least 2 returns for the initial variance");
  const Eigen::ArrayXd c = data.values.array() - data.values.mean();
  init.x0 = Eigen::VectorXd::Zero(2);
  init.x0[0] = c.square().sum() / static_cast<double>(n - 1);
  // Given theta the variance is a deterministic function of past residuals,
  // so it carries no prior uncertainty. With a unit prior the GARCH-M
  // measurement update (H = [delta, y]) can drive h negative.
  init.P0 = Eigen::MatrixXd::Zero(2, 2);
  init.P0(1, 1) = 1.0;
  return init;
}

FilterOutput<double> filter_returns(const ModelInstance& model, const ReturnSeries& data) {
  const InitialState init = default_initial_state(model.spec(), data);
  const std::span<const double> y(data.values.data(), static_cast<std::size_t>(data.size()));
  return run_filter<double>(model, y, init.x0, init.P0);
}

double log_likelihood_at(const ModelSpec& spec, const Theta& theta, const ReturnSeries& data) {
  const ModelInstance model(spec, theta);
  const InitialState init = default_initial_state(spec, data);
  const std::span<const double> y(data.values.data(), static_cast<std::size_t>(data.size()));
  return filter_log_likelihood<double>(model, y, init.x0, init.P0).first;
}

}  // namespace amh
