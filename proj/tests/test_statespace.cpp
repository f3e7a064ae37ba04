#include <doctest.h>

#include <cmath>
#include <numbers>
#include <span>

#include "amh/errors.hpp"
#include "amh/statespace.hpp"
#include "support.hpp"

using namespace amh;
namespace at = amh::testing;

namespace {

std::span<const double> view(const Eigen::VectorXd& y) {
  return {y.data(), static_cast<std::size_t>(y.size())};
}

SystemMatrices<double> scalar_system(double F, double Q) {
  return {Eigen::MatrixXd::Constant(1, 1, F), Eigen::MatrixXd::Zero(1, 0), Eigen::MatrixXd::Ones(1, 1),
          Eigen::MatrixXd::Constant(1, 1, Q)};
}

LinearGaussianModel<double> instance_model(const at::SmallInstance& s) {
  return {{s.F, Eigen::MatrixXd::Zero(s.F.rows(), 0), s.G, s.Q}, s.H, s.R};
}

/// A rule whose observation variance turns negative at a chosen step.
struct BrokenVariance {
  SystemMatrices<double> sys = scalar_system(1.0, 0.0);
  Index bad_step = 2;
  const SystemMatrices<double>& system() const { return sys; }
  Index first_step() const { return 0; }
  void control(Index, std::span<const double>, std::optional<double>, Eigen::Ref<Vector<double>>) const {}
  ObservationVariance<double> observe(Index t, std::span<const double>, const Eigen::Ref<const Vector<double>>&,
                                      Eigen::Ref<RowVector<double>> h) const {
    h[0] = 0.0;
    return {t == bad_step ? -1.0 : 1.0, false};
  }
};

/// Control input that feeds the previous innovation back into the state.
struct FeedbackRule {
  SystemMatrices<double> sys{Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 0.3),
                             Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Constant(1, 1, 0.1)};
  const SystemMatrices<double>& system() const { return sys; }
  Index first_step() const { return 1; }
  void control(Index t, std::span<const double> y, std::optional<double> prev_e,
               Eigen::Ref<Vector<double>> u) const {
    u[0] = prev_e.value_or(y[static_cast<std::size_t>(t - 1)]);
  }
  ObservationVariance<double> observe(Index, std::span<const double>, const Eigen::Ref<const Vector<double>>&,
                                      Eigen::Ref<RowVector<double>> h) const {
    h[0] = 1.0;
    return {0.5, false};
  }
};

static_assert(ObservationRule<LinearGaussianModel<double>, double>);
static_assert(ObservationRule<BrokenVariance, double>);

}  // namespace

TEST_CASE("single scalar step by hand") {
  const LinearGaussianModel<double> m(scalar_system(1.0, 0.0), Eigen::RowVectorXd::Ones(1), 1.0);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 2.0);
  const FilterOutput<double> fo = run_filter<double>(m, view(y), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1));
  REQUIRE(fo.steps.size() == 1);
  const FilterStep<double>& s = fo.steps[0];
  CHECK(s.t == 0);
  CHECK(s.e == 2.0);
  CHECK(s.r_e == 2.0);
  CHECK(s.gain[0] == 0.5);
  CHECK(s.x_filt[0] == 1.0);
  CHECK(s.P_filt(0, 0) == 0.5);
  CHECK(fo.effective_length() == 1);
  CHECK(std::abs(fo.log_likelihood - (-2.26552)) <= 1e-5);
}

TEST_CASE("a zero-uncertainty prior is never moved by data") {
  const LinearGaussianModel<double> m(scalar_system(1.0, 0.0), Eigen::RowVectorXd::Ones(1), 1.0);
  const Eigen::VectorXd y = at::gaussian_noise(20, 3, 5.0);
  const FilterOutput<double> fo =
      run_filter<double>(m, view(y), Eigen::VectorXd::Constant(1, 0.7), Eigen::MatrixXd::Zero(1, 1));
  for (const auto& s : fo.steps) CHECK(s.x_filt[0] == 0.7);
}

TEST_CASE("diffuse static state: filtered mean approaches the sample mean") {
  const LinearGaussianModel<double> m(scalar_system(1.0, 0.0), Eigen::RowVectorXd::Ones(1), 1.0);
  const Eigen::Vector3d y(1.0, 2.5, -0.4);
  const FilterOutput<double> fo =
      run_filter<double>(m, view(y), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 1e8));
  CHECK(std::abs(fo.steps.back().x_filt[0] - y.mean()) <= 1e-4);
  // Batch posterior: precision 1/P0 + 3, mean sum(y) / (1/P0 + 3). A prior
  // of 1e8 costs about eight digits to cancellation in P.
  CHECK(fo.steps.back().x_filt[0] == doctest::Approx(y.sum() / (1e-8 + 3.0)).epsilon(1e-7));
  CHECK(fo.steps.back().P_filt(0, 0) == doctest::Approx(1.0 / (1e-8 + 3.0)).epsilon(1e-7));
}

TEST_CASE("log_likelihood closed forms") {
  FilterOutput<double> fo;
  FilterStep<double> s;
  s.e = 2.0;
  s.r_e = 2.0;
  fo.steps.push_back(s);
  CHECK(log_likelihood(fo) == doctest::Approx(-0.5 * (std::log(2 * std::numbers::pi) + std::log(2.0) + 2.0)));
  CHECK(std::abs(log_likelihood(fo) - (-2.26552)) <= 1e-5);

  FilterOutput<double> white;
  for (int i = 0; i < 7; ++i) {
    FilterStep<double> z;
    z.e = 0.0;
    z.r_e = 1.0;
    white.steps.push_back(z);
  }
  CHECK(log_likelihood(white) == doctest::Approx(-3.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("oracle: terminal posterior equals joint-Gaussian conditioning") {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const at::SmallInstance s = at::random_instance(seed);
    const FilterOutput<double> fo = run_filter<double>(instance_model(s), view(s.y), s.x0, s.P0);
    const at::Posterior post = at::brute_force_posterior(s.F, s.G, s.Q, s.H, s.R, s.x0, s.P0, s.y);
    CHECK((fo.steps.back().x_filt - post.mean).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((fo.steps.back().P_filt - post.cov).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("oracle: log-likelihood equals the joint Gaussian density of y") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const at::SmallInstance s = at::random_instance(seed);
    const LinearGaussianModel<double> m = instance_model(s);
    const FilterOutput<double> fo = run_filter<double>(m, view(s.y), s.x0, s.P0);
    const double oracle = at::brute_force_log_likelihood(s.F, s.G, s.Q, s.H, s.R, s.x0, s.P0, s.y);
    CHECK(fo.log_likelihood == doctest::Approx(oracle).epsilon(1e-10));
    CHECK(filter_log_likelihood<double>(m, view(s.y), s.x0, s.P0).first == fo.log_likelihood);
    // Additivity: the total is the plain sum of per-step terms.
    double sum = 0.0;
    for (const auto& st : fo.steps) sum += log_likelihood_term(st.e, st.r_e);
    CHECK(std::abs(fo.log_likelihood - sum) <= 1e-12 * std::max(1.0, std::abs(sum)));
    CHECK(log_likelihood(fo) == doctest::Approx(fo.log_likelihood).epsilon(1e-14));
  }
}

TEST_CASE("oracle: a four-state model goes through the dynamic-size path") {
  NormalStream rng(99);
  const auto gauss = [&](Index r, Index c) {
    Eigen::MatrixXd m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = rng.normal();
    return m;
  };
  const Eigen::MatrixXd F = 0.4 * gauss(4, 4);
  const Eigen::MatrixXd G = gauss(4, 2);
  const Eigen::MatrixXd Q = Eigen::Matrix2d{{0.5, 0.1}, {0.1, 0.3}};
  const Eigen::RowVectorXd H = gauss(1, 4);
  const Eigen::VectorXd x0 = gauss(4, 1);
  const Eigen::MatrixXd P0 = Eigen::MatrixXd::Identity(4, 4);
  const Eigen::VectorXd y = gauss(5, 1);
  const LinearGaussianModel<double> m({F, Eigen::MatrixXd::Zero(4, 0), G, Q}, H, 0.7);
  const FilterOutput<double> fo = run_filter<double>(m, view(y), x0, P0);
  const at::Posterior post = at::brute_force_posterior(F, G, Q, H, 0.7, x0, P0, y);
  CHECK((fo.steps.back().x_filt - post.mean).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((fo.steps.back().P_filt - post.cov).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("oracle: smoothed moments equal conditioning on the whole sample") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const at::SmallInstance s = at::random_instance(seed);
    const LinearGaussianModel<double> m = instance_model(s);
    const FilterOutput<double> fo = run_filter<double>(m, view(s.y), s.x0, s.P0);
    const SmoothedOutput<double> so = rts_smooth(fo, m.system());
    REQUIRE(so.x.size() == fo.steps.size());
    for (Index k = 0; k < s.y.size(); ++k) {
      const at::Posterior post = at::brute_force_posterior(s.F, s.G, s.Q, s.H, s.R, s.x0, s.P0, s.y, k);
      const auto i = static_cast<std::size_t>(k);
      CHECK((so.x[i] - post.mean).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((so.P[i] - post.cov).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("smoother base case, static state and information gain") {
  const LinearGaussianModel<double> m(scalar_system(1.0, 0.0), Eigen::RowVectorXd::Ones(1), 0.5);
  const Eigen::VectorXd y = at::gaussian_noise(40, 8);
  const FilterOutput<double> fo = run_filter<double>(m, view(y), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1));
  const SmoothedOutput<double> so = rts_smooth(fo, m.system());
  CHECK(so.x.back() == fo.steps.back().x_filt);
  CHECK(so.P.back() == fo.steps.back().P_filt);
  for (std::size_t k = 0; k < so.x.size(); ++k) {
    CHECK(std::abs(so.x[k][0] - fo.steps.back().x_filt[0]) <= 1e-10);
    CHECK(so.P[k](0, 0) <= fo.steps[k].P_filt(0, 0) + 1e-10);
    CHECK(so.t[k] == fo.steps[k].t);
  }
}

TEST_CASE("smoother handles a singular predicted covariance") {
  // Second state is deterministic and unobserved: P_pred is singular.
  SystemMatrices<double> sys{Eigen::Matrix2d{{1.0, 0.0}, {0.0, 0.9}}, Eigen::MatrixXd::Zero(2, 0),
                             Eigen::Vector2d(1.0, 0.0), Eigen::MatrixXd::Constant(1, 1, 0.01)};
  const LinearGaussianModel<double> m(sys, Eigen::RowVector2d(1.0, 0.0), 0.2);
  const Eigen::VectorXd y = at::gaussian_noise(15, 4);
  Eigen::Matrix2d P0 = Eigen::Matrix2d::Zero();
  P0(0, 0) = 1.0;
  const FilterOutput<double> fo = run_filter<double>(m, view(y), Eigen::Vector2d(0.0, 1.0), P0);
  const SmoothedOutput<double> so = rts_smooth(fo, m.system());
  for (std::size_t k = 0; k < so.x.size(); ++k) {
    CHECK(so.x[k].allFinite());
    CHECK((so.P[k].diagonal() - fo.steps[k].P_filt.diagonal()).maxCoeff() <= 1e-10);
  }
  CHECK_THROWS_AS(rts_smooth(fo, scalar_system(1.0, 0.0)), std::invalid_argument);
}

TEST_CASE("covariances stay symmetric to 1e-12") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const at::SmallInstance s = at::random_instance(seed);
    const FilterOutput<double> fo = run_filter<double>(instance_model(s), view(s.y), s.x0, s.P0);
    for (const auto& st : fo.steps) {
      CHECK((st.P_filt - st.P_filt.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK((st.P_pred - st.P_pred.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(st.r_e > 0.0);
    }
  }
}

TEST_CASE("a non-positive innovation variance reports its step") {
  const BrokenVariance m;
  const Eigen::VectorXd y = Eigen::VectorXd::Ones(5);
  try {
    run_filter<double>(m, view(y), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1));
    FAIL("expected a numerical failure");
  } catch (const NumericalFailure& e) {
    CHECK(e.step() == 2);
  }
  const Eigen::VectorXd bad = Eigen::VectorXd::Constant(3, std::nan(""));
  const LinearGaussianModel<double> lg(scalar_system(1.0, 0.0), Eigen::RowVectorXd::Ones(1), 1.0);
  CHECK_THROWS_AS(run_filter<double>(lg, view(bad), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1)),
                  NumericalFailure);
}

TEST_CASE("control input enters the time update with the previous innovation") {
  const FeedbackRule m;
  const Eigen::Vector3d y(0.4, 1.0, -0.5);
  const FilterOutput<double> fo = run_filter<double>(m, view(y), Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1));
  REQUIRE(fo.steps.size() == 2);
  // Step t = 1, seeded with y_0.
  double x = 0.5 * 0.0 + 0.3 * 0.4;
  double P = 0.25 * 1.0 + 0.1;
  CHECK(fo.steps[0].x_pred[0] == doctest::Approx(x));
  double e = 1.0 - x;
  double re = P + 0.5;
  CHECK(fo.steps[0].e == doctest::Approx(e));
  x += P / re * e;
  P -= P * P / re;
  // Step t = 2 uses the innovation of step 1.
  const double xp = 0.5 * x + 0.3 * e;
  CHECK(fo.steps[1].x_pred[0] == doctest::Approx(xp));
  CHECK(fo.steps[1].P_pred(0, 0) == doctest::Approx(0.25 * P + 0.1));
}

TEST_CASE("system and model validation") {
  SystemMatrices<double> bad{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Zero(2, 0),
                             Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(LinearGaussianModel<double>(scalar_system(1, 0), Eigen::RowVectorXd::Ones(1), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(LinearGaussianModel<double>(scalar_system(1, 0), Eigen::RowVectorXd::Ones(2), 1.0),
                  std::invalid_argument);
}

TEST_CASE("the filter is generic in the scalar type") {
  using LD = long double;
  SystemMatrices<LD> sys{Matrix<LD>::Ones(1, 1), Matrix<LD>::Zero(1, 0), Matrix<LD>::Ones(1, 1),
                         Matrix<LD>::Zero(1, 1)};
  const LinearGaussianModel<LD> m(sys, RowVector<LD>::Ones(1), LD(1));
  const std::vector<LD> y = {2.0L};
  const FilterOutput<LD> fo = run_filter<LD>(m, std::span<const LD>(y), Vector<LD>::Zero(1), Matrix<LD>::Ones(1, 1));
  CHECK(static_cast<double>(fo.steps[0].x_filt[0]) == 1.0);
  CHECK(std::abs(static_cast<double>(fo.log_likelihood) - (-2.26552)) <= 1e-5);
}
