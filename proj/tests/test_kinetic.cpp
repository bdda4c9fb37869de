#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kinevo/kinetic.hpp"

using namespace kinevo;

namespace {

// d = 2, reward gap c, kappa 1: x_2 follows the logistic ODE
// xdot = c x (1 - x); closed form x(t) = x0 e^{ct} / (1 - x0 + x0 e^{ct}).
double logistic_exact(double x0, double c, double t) {
  double e = std::exp(c * t);
  return x0 * e / (1.0 - x0 + x0 * e);
}

DriftSpec logistic_drift(double gap) {
  return replicator_drift(make_linear_tabular({0.0, gap}, {{0, 0}, {0, 0}}), 1.0);
}

double moment(const std::vector<double>& x, double order) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += std::pow(static_cast<double>(i + 1), order) * x[i];
  return s;
}

}  // namespace

TEST_CASE("logistic oracle: adaptive integration hits the closed form") {
  std::vector<double> x = integrate_to(logistic_drift(2.0), {0.9, 0.1},
                                       fixed_principal({}), 1.0);
  double oracle = logistic_exact(0.1, 2.0, 1.0);
  CHECK(oracle == doctest::Approx(0.450853060379).epsilon(1e-9));  // frozen value
  CHECK(std::abs(x[1] - oracle) / oracle < 1e-8);
  CHECK(x[0] + x[1] == doctest::Approx(1.0));
}

TEST_CASE("fixed RK4 shows fourth-order error decay") {
  double oracle = logistic_exact(0.1, 2.0, 1.0);
  auto err_at = [&](double h) {
    StepSpec step;
    step.method = StepMethod::rk4_fixed;
    step.h_ode = h;
    auto x = integrate_to(logistic_drift(2.0), {0.9, 0.1}, fixed_principal({}), 1.0, step);
    return std::abs(x[1] - oracle);
  };
  double ratio = err_at(0.1) / err_at(0.05);
  CHECK(ratio > 14.0);
  CHECK(ratio < 18.0);
}

TEST_CASE("zero drift leaves the state constant") {
  auto drift = replicator_drift(make_linear_tabular({1.0, 1.0}, {{0, 0}, {0, 0}}), 1.0);
  auto traj = integrate(drift, {0.3, 0.7}, fixed_principal({}), 2.0);
  for (const auto& s : traj.states) {
    CHECK(s[0] == doctest::Approx(0.3));
    CHECK(s[1] == doctest::Approx(0.7));
  }
}

TEST_CASE("simplex families stay normalized along the flow") {
  auto payoff = make_linear_tabular({0.5, 0.0, 1.0},
                                    {{0.0, 2.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 0.0, 0.5}});
  auto traj = integrate(replicator_drift(payoff, 1.5), {0.2, 0.5, 0.3},
                        fixed_principal({}), 3.0);
  for (const auto& s : traj.states) {
    double sum = s[0] + s[1] + s[2];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    for (double c : s) CHECK(c >= 0.0);
  }
}

TEST_CASE("Smoluchowski oracle: constant kernel halves the number density at t=1") {
  // monodisperse start, C = 1: m0(t) = 1/(1+t)
  std::size_t jmax = 64;
  std::vector<double> x0(jmax, 0.0);
  x0[0] = 1.0;
  auto x = integrate_to(smoluchowski_drift(constant_kernel(1.0)), x0,
                        fixed_principal({}), 1.0);
  CHECK(moment(x, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
  // mass deficit bounded by the truncation leak
  CHECK(moment(x, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("attachment moment identity: m1' = alpha lambda + (1-alpha) lambda m1") {
  AttachSpec a;
  a.alpha = 0.5;
  a.lambda = [](const std::vector<double>&, const Control&) { return 1.0; };
  std::vector<double> x0(64, 0.0);
  x0[0] = 1.0;  // m1(0) = 1
  auto x = integrate_to(attachment_drift(a), x0, fixed_principal({}), 1.0);
  double oracle = 2.0 * std::exp(0.5) - 1.0;  // frozen: 2.297442541400
  CHECK(oracle == doctest::Approx(2.297442541400).epsilon(1e-10));
  CHECK(moment(x, 1.0) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("growth drift: linear birth and death channels integrate exactly") {
  GrowthCoeffs g;
  g.death.emplace_back(1, [](const std::vector<double>& x, const Control&) {
    return 2.0 * x[0];
  });
  auto x = integrate_to(growth_drift(g), {1.0, 0.0}, fixed_principal({}), 1.0);
  CHECK(x[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-8));
}

TEST_CASE("composite drift sums its parts") {
  GrowthCoeffs birth, death;
  birth.birth.emplace_back(1, [](const std::vector<double>&, const Control&) { return 0.7; });
  death.death.emplace_back(1, [](const std::vector<double>& x, const Control&) {
    return 0.2 * x[0];
  });
  auto combo = composite_drift({growth_drift(birth), growth_drift(death)});
  auto v = combo.eval({1.0}, {});
  CHECK(v[0] == doctest::Approx(0.7 - 0.2));
}

TEST_CASE("positivity guard rejects steps that cross zero") {
  // xdot = -10 sqrt(x) reaches zero in finite time; the integrator must not
  // land at a negative coordinate
  DriftSpec drift;
  drift.f = [](const std::vector<double>& x, const Control&, std::vector<double>& v) {
    v.assign(1, -10.0 * std::sqrt(std::max(0.0, x[0])));
  };
  auto traj = integrate(drift, {1.0}, fixed_principal({}), 0.15);
  for (const auto& s : traj.states) CHECK(s[0] >= 0.0);
}

TEST_CASE("best-response control feeds back into the flow") {
  // principal pushes b toward x_2; gap = b so the drift stalls near the vertex
  PrincipalModel p;
  p.mode = PrincipalMode::best_response;
  p.control_box = {{0.0, 1.0}};
  p.reward = [](const std::vector<double>& x, const Control& b) {
    return -(b[0] - x[1]) * (b[0] - x[1]);
  };
  TabularPayoffSpec spec;
  spec.b_grid = {0.0, 1.0};
  spec.values = {{0.0, 0.0}, {0.0, 1.0}};  // R_2 = b, R_1 = 0
  auto drift = replicator_drift(make_tabular(spec), 1.0);
  auto x = integrate_to(drift, {0.5, 0.5}, p, 1.0);
  // with b = x_2 the gap equals x_2: xdot = x^2(1-x), strictly growing from 0.5
  CHECK(x[1] > 0.5);
  CHECK(x[1] < 1.0);
}

TEST_CASE("Lyapunov checks: non-increase, subcritical bound, exact identity") {
  AttachSpec a;
  a.alpha = 0.5;
  a.lambda = [](const std::vector<double>&, const Control&) { return 1.0; };
  std::vector<double> x0(64, 0.0);
  x0[0] = 1.0;
  auto traj = integrate(attachment_drift(a), x0, fixed_principal({}), 1.0);

  // m1 grows as m1' = a m1 + b with a = (1-alpha) lambda, b = alpha lambda
  LyapunovWeight L = LyapunovWeight::sizes(64);
  L.a = 0.5;
  L.b = 0.5;
  CHECK(lyapunov_check(traj, L, LyapunovMode::subcritical).ok);
  CHECK(lyapunov_check(traj, L, LyapunovMode::exact).ok);
  // m1 is increasing here, so non-increase must flag a violation
  auto rep = lyapunov_check(traj, L, LyapunovMode::non_increase);
  CHECK_FALSE(rep.ok);
  CHECK(rep.first_violation_time >= 0.0);

  // pure coagulation never raises the number density
  std::vector<double> y0(32, 0.0);
  y0[0] = 1.0;
  auto ctraj = integrate(smoluchowski_drift(constant_kernel(1.0)), y0,
                         fixed_principal({}), 1.0);
  CHECK(lyapunov_check(ctraj, LyapunovWeight::ones(32), LyapunovMode::non_increase).ok);
}

TEST_CASE("integrate validates its inputs") {
  CHECK_THROWS_AS(integrate(logistic_drift(1.0), {0.9, 0.1}, fixed_principal({}), 0.0),
                  std::invalid_argument);
}
