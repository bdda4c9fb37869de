#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kinevo/best_response.hpp"

using namespace kinevo;

TEST_CASE("concave quadratic: interior argmax to high accuracy") {
  PrincipalModel p;
  p.control_box = {{0.0, 1.0}};
  p.reward = [](const std::vector<double>& x, const Control& b) {
    return -(b[0] - x[0]) * (b[0] - x[0]);
  };
  Control b = best_response({0.37}, p);
  CHECK(b[0] == doctest::Approx(0.37).epsilon(1e-7));
}

TEST_CASE("monotone reward: boundary argmax is exact") {
  PrincipalModel p;
  p.control_box = {{0.0, 2.0}};
  p.reward = [](const std::vector<double>&, const Control& b) { return 3.0 * b[0]; };
  CHECK(best_response({1.0}, p)[0] == doctest::Approx(2.0));
  p.reward = [](const std::vector<double>&, const Control& b) { return -b[0]; };
  CHECK(best_response({1.0}, p)[0] == doctest::Approx(0.0));
}

TEST_CASE("bimodal reward: grid fallback finds the global maximum") {
  PrincipalModel p;
  p.control_box = {{0.0, 1.0}};
  // peaks at 0.2 (height 1) and 0.8 (height 1.5)
  p.reward = [](const std::vector<double>&, const Control& b) {
    auto bump = [](double c, double h, double v) {
      return h * std::exp(-200.0 * (v - c) * (v - c));
    };
    return bump(0.2, 1.0, b[0]) + bump(0.8, 1.5, b[0]);
  };
  CHECK(best_response({1.0}, p)[0] == doctest::Approx(0.8).epsilon(1e-3));
}

TEST_CASE("separable quadratic in two control axes") {
  PrincipalModel p;
  p.control_box = {{0.0, 1.0}, {0.0, 1.0}};
  p.reward = [](const std::vector<double>&, const Control& b) {
    return -(b[0] - 0.3) * (b[0] - 0.3) - 2.0 * (b[1] - 0.6) * (b[1] - 0.6);
  };
  Control b = best_response({1.0}, p);
  CHECK(b[0] == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(b[1] == doctest::Approx(0.6).epsilon(1e-6));
}

TEST_CASE("resolve_control per mode") {
  PrincipalModel p = fixed_principal({0.7});
  CHECK(resolve_control(p, 0.0, {1.0})[0] == doctest::Approx(0.7));
  p.mode = PrincipalMode::policy;
  CHECK_THROWS_AS(resolve_control(p, 0.0, {1.0}), std::invalid_argument);
  p.policy = [](double, const std::vector<double>& x) { return Control{x[0]}; };
  // policy output is clamped to the control box (degenerate box at 0.7)
  CHECK(resolve_control(p, 0.0, {0.2})[0] == doctest::Approx(0.7));
}

TEST_CASE("degenerate and empty control boxes") {
  PrincipalModel p;
  p.control_box = {};
  p.reward = [](const std::vector<double>&, const Control&) { return 0.0; };
  CHECK(best_response({1.0}, p).empty());
  p.control_box = {{0.4, 0.4}};
  CHECK(best_response({1.0}, p)[0] == doctest::Approx(0.4));
}
