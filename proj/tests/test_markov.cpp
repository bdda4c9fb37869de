#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "kinevo/kinetic.hpp"
#include "kinevo/markov.hpp"

using namespace kinevo;

namespace {

/// First-order generator action on the coordinate functions: sum of
/// rate * h * delta. For a correctly scaled chain this approaches (or equals)
/// the kinetic drift.
std::vector<double> generator_drift(const TransitionList& list, const OccupationState& s) {
  std::vector<double> v(s.counts.size(), 0.0);
  for (const auto& e : list.entries)
    for (auto [idx, dc] : e.delta) v[idx] += e.rate * s.scale * static_cast<double>(dc);
  return v;
}

PayoffModel two_payoff() { return make_linear_tabular({0.0, 2.0}, {{0, 0}, {0, 0}}); }

}  // namespace

TEST_CASE("pairwise rates by hand") {
  // counts (3,1), r = (0,1), kappa = 2, N = 4: single transition at 2/4*3*1*1
  auto payoff = make_linear_tabular({0.0, 1.0}, {{0, 0}, {0, 0}});
  OccupationState s({3, 1}, 0.25);
  TransitionList list = build_pairwise(s, payoff, {}, 2.0);
  REQUIRE(list.entries.size() == 1);
  CHECK(list.entries[0].rate == doctest::Approx(1.5));
  CHECK(list.entries[0].delta[0] == std::pair<std::size_t, int>{0, -1});
  CHECK(list.entries[0].delta[1] == std::pair<std::size_t, int>{1, +1});
  CHECK(build_pairwise(OccupationState({1, 0}, 1.0), payoff, {}, 1.0).entries.empty());
  CHECK_THROWS_AS(build_pairwise(OccupationState({0, 0}, 1.0), payoff, {}, 1.0),
                  std::invalid_argument);
}

TEST_CASE("pairwise generator is exactly dual to the replicator drift") {
  auto payoff = make_linear_tabular({1.0, 0.0, -0.5},
                                    {{0.0, 1.0, 0.0}, {2.0, 0.0, 0.3}, {0.0, 0.5, 1.0}});
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<long long> n{1 + static_cast<long long>(rng() % 20),
                             1 + static_cast<long long>(rng() % 20),
                             1 + static_cast<long long>(rng() % 20)};
    auto s = OccupationState::from_population(n);
    auto gen = generator_drift(build_pairwise(s, payoff, {}, 1.7), s);
    std::vector<double> ode;
    drift_replicator(s.scaled(), payoff, {}, 1.7, ode);
    CHECK(sup_dist(gen, ode) < 1e-12);
  }
}

TEST_CASE("kth-order generator is exactly dual to its drift") {
  auto payoff = make_linear_tabular({1.0, 0.0, -0.5, 0.2},
                                    {{0.0, 1.0, 0.0, 0.0},
                                     {2.0, 0.0, 0.3, 0.0},
                                     {0.0, 0.5, 1.0, 0.1},
                                     {0.4, 0.0, 0.0, 0.9}});
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<long long> n(4);
    for (auto& c : n) c = 1 + static_cast<long long>(rng() % 15);
    auto s = OccupationState::from_population(n);
    auto gen = generator_drift(
        build_kth_order(s, payoff, {}, 0.8, 3, spread_group_rate()), s);
    std::vector<double> ode;
    drift_kth_order(s.scaled(), payoff, {}, 0.8, 3, spread_group_rate(), ode);
    CHECK(sup_dist(gen, ode) < 1e-12);
  }
}

TEST_CASE("multiclass generators are exactly dual to their drifts (C1 and C2)") {
  std::vector<PayoffModel> payoffs{
      make_linear_tabular({0.0, 1.0}, {{0.5, 0.0}, {0.0, 0.2}}),
      make_linear_tabular({0.3, 0.0}, {{0.0, 1.0}, {0.4, 0.0}})};
  ClassStructure cs;
  cs.num_classes = 2;
  cs.per_class_kappa = {1.0, 2.0};
  std::mt19937_64 rng(17);
  for (CommMode mode : {CommMode::C1_no_communication, CommMode::C2_full_communication}) {
    cs.comm_mode = mode;
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<long long> n(4);
      for (auto& c : n) c = 1 + static_cast<long long>(rng() % 12);
      auto s = OccupationState::from_population(n);
      long long N = s.total();
      double w0 = static_cast<double>(n[0] + n[1]) / static_cast<double>(N);
      cs.class_fractions = {w0, 1.0 - w0};
      auto gen = generator_drift(build_multiclass(s, payoffs, {}, cs), s);
      std::vector<double> ode;
      drift_multiclass(s.scaled(), payoffs, {}, cs, ode);
      CHECK(sup_dist(gen, ode) < 1e-12);
    }
  }
}

TEST_CASE("agent count is conserved by every pairwise / kth-order / multiclass transition") {
  auto payoff = two_payoff();
  OccupationState s({4, 6}, 0.1);
  for (const auto& e : build_pairwise(s, payoff, {}, 1.0).entries) {
    int sum = 0;
    for (auto [idx, dc] : e.delta) sum += dc;
    CHECK(sum == 0);
  }
  auto payoff3 = make_linear_tabular({0.0, 1.0, 2.0},
                                     {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  OccupationState s3({3, 3, 4}, 0.1);
  for (const auto& e : build_kth_order(s3, payoff3, {}, 1.0, 3, spread_group_rate()).entries) {
    int sum = 0;
    for (auto [idx, dc] : e.delta) sum += dc;
    CHECK(sum == 0);
  }
}

TEST_CASE("coalition transitions conserve total size and match the kernel rates") {
  auto kernel = constant_kernel(1.0, 0.5);
  OccupationState s({4, 2, 1, 0, 0, 0}, 0.1);
  TransitionList list = build_coalition(s, kernel, {});
  CHECK(!list.entries.empty());
  for (const auto& e : list.entries) {
    long long mass = 0;
    for (auto [idx, dc] : e.delta) mass += static_cast<long long>(idx + 1) * dc;
    CHECK(mass == 0);
  }
  // diagonal pair 1+1: C x_1 (x_1 - h) / h = 1 * 0.4 * 0.3 / 0.1 = 1.2
  bool found = false;
  for (const auto& e : list.entries)
    if (e.delta.size() == 2 && e.delta[0] == std::pair<std::size_t, int>{0, -2}) {
      CHECK(e.rate == doctest::Approx(1.2));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("coalition merges past the truncation go to blocked_rate") {
  auto kernel = constant_kernel(1.0);
  OccupationState s({0, 1, 1}, 0.5);  // sizes 2 and 3: product 5 > jmax 3
  TransitionList list = build_coalition(s, kernel, {});
  CHECK(list.entries.empty());
  CHECK(list.blocked_rate > 0.0);
}

TEST_CASE("coalition generator approaches the Smoluchowski field at rate h") {
  auto kernel = constant_kernel(1.0, 0.25);
  std::vector<double> errs;
  for (long long inv_h : {100, 200, 400}) {
    // support on sizes 1..3 only, so no merge product exceeds jmax = 6 and
    // the truncation never interferes; the residual gap is the diagonal O(h)
    std::vector<double> x{0.5, 0.3, 0.2, 0.0, 0.0, 0.0};
    std::vector<long long> n(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      n[i] = std::llround(x[i] * static_cast<double>(inv_h));
    OccupationState s(n, 1.0 / static_cast<double>(inv_h));
    auto gen = generator_drift(build_coalition(s, kernel, {}), s);
    std::vector<double> ode;
    drift_smoluchowski(s.scaled(), kernel, {}, ode);
    errs.push_back(sup_dist(gen, ode));
  }
  CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("growth channels: conditional positivity and truncation accounting") {
  GrowthCoeffs g;
  g.death.emplace_back(2, [](const std::vector<double>&, const Control&) { return 1.0; });
  g.birth.emplace_back(9, [](const std::vector<double>&, const Control&) { return 1.0; });
  OccupationState empty2({1, 0, 0}, 0.5);
  TransitionList list = build_growth(empty2, g, {});
  // death of an absent state is infeasible, birth beyond jmax=3 is blocked
  CHECK(list.entries.empty());
  CHECK(list.infeasible_count == 1);
  CHECK(list.blocked_rate == doctest::Approx(2.0));

  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<long long> n(4);
    for (auto& c : n) c = static_cast<long long>(rng() % 3);
    if (std::accumulate(n.begin(), n.end(), 0LL) == 0) n[0] = 1;
    OccupationState s(n, 0.25);
    for (const auto& e : build_growth(s, g, {}).entries)
      CHECK(entry_feasible(e, s.counts));
  }
}

TEST_CASE("growth generator is exactly dual to its drift away from the boundary") {
  GrowthCoeffs g;
  g.birth.emplace_back(1, [](const std::vector<double>&, const Control&) { return 0.7; });
  g.death.emplace_back(1, [](const std::vector<double>& x, const Control&) {
    return 0.3 * x[0];
  });
  g.merge2.emplace_back(1, 1, 2, [](const std::vector<double>& x, const Control&) {
    return x[0] * x[0];
  });
  g.split1.emplace_back(2, 1, 1, [](const std::vector<double>& x, const Control&) {
    return 0.5 * x[1];
  });
  OccupationState s({40, 20, 5}, 0.02);
  auto gen = generator_drift(build_growth(s, g, {}), s);
  std::vector<double> ode;
  drift_growth(s.scaled(), g, {}, ode);
  CHECK(sup_dist(gen, ode) < 1e-12);
}

TEST_CASE("attachment generator is exactly dual to its drift") {
  AttachSpec a;
  a.alpha = 0.5;
  a.lambda = [](const std::vector<double>&, const Control&) { return 1.0; };
  OccupationState s({10, 5, 2, 0}, 0.1);
  auto gen = generator_drift(build_attachment(s, a, {}), s);
  std::vector<double> ode;
  drift_attachment(s.scaled(), a, {}, ode);
  CHECK(sup_dist(gen, ode) < 1e-12);
}

TEST_CASE("simulate is deterministic in the seed") {
  auto payoff = two_payoff();
  auto builder = [&](const OccupationState& s, const Control& b) {
    return build_pairwise(s, payoff, b, 1.0);
  };
  OccupationState x0({20, 5}, 0.04);
  auto t1 = simulate(builder, x0, fixed_principal({}), 2.0, 99);
  auto t2 = simulate(builder, x0, fixed_principal({}), 2.0, 99);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t k = 0; k < t1.size(); ++k) {
    CHECK(t1.times[k] == t2.times[k]);
    CHECK(t1.counts[k] == t2.counts[k]);
  }
  auto t3 = simulate(builder, x0, fixed_principal({}), 2.0, 100);
  CHECK(t1.times != t3.times);
}

TEST_CASE("absorbing states pad the trajectory to t_end") {
  auto payoff = two_payoff();
  auto builder = [&](const OccupationState& s, const Control& b) {
    return build_pairwise(s, payoff, b, 1.0);
  };
  // vertex start: no transitions at all
  auto traj = simulate(builder, OccupationState({0, 7}, 1.0 / 7.0), fixed_principal({}),
                       3.0, 1);
  CHECK(traj.size() == 2);
  CHECK(traj.times.back() == doctest::Approx(3.0));
  CHECK(traj.states.front() == traj.states.back());
}

TEST_CASE("two-agent absorption matches the exponential oracle") {
  // n = (1,1), gap 1, kappa 1: one jump at rate 1/2, E x_2(1) = 1 - e^{-1/2}/2
  auto payoff = make_linear_tabular({0.0, 1.0}, {{0, 0}, {0, 0}});
  auto builder = [&](const OccupationState& s, const Control& b) {
    return build_pairwise(s, payoff, b, 1.0);
  };
  auto g = [](const std::vector<double>& x) { return x[1]; };
  auto res = ensemble_mean(builder, OccupationState({1, 1}, 0.5), fixed_principal({}), 1.0,
                           g, 20000, 7, 2);
  double oracle = 1.0 - 0.5 * std::exp(-0.5);
  CHECK(std::abs(res.mean - oracle) < 4.0 * res.std_error);
  CHECK(res.std_error < 0.01);
}

TEST_CASE("ensemble_mean is independent of the thread count") {
  auto payoff = two_payoff();
  auto builder = [&](const OccupationState& s, const Control& b) {
    return build_pairwise(s, payoff, b, 1.0);
  };
  auto g = [](const std::vector<double>& x) { return x[1]; };
  OccupationState x0({30, 10}, 0.025);
  auto r1 = ensemble_mean(builder, x0, fixed_principal({}), 1.0, g, 500, 5, 1);
  auto r8 = ensemble_mean(builder, x0, fixed_principal({}), 1.0, g, 500, 5, 8);
  CHECK(r1.mean == r8.mean);
  CHECK(r1.std_error == r8.std_error);
}

TEST_CASE("policy control refreshes on the tau grid") {
  auto payoff = two_payoff();
  auto builder = [&](const OccupationState& s, const Control& b) {
    TransitionList list = build_pairwise(s, payoff, b, 1.0);
    // scale all rates by the control so the policy visibly matters
    for (auto& e : list.entries) e.rate *= b[0];
    list.total_rate *= b[0];
    return list;
  };
  PrincipalModel p;
  p.mode = PrincipalMode::policy;
  p.control_box = {{0.0, 10.0}};
  p.policy_tau = 0.5;
  p.policy = [](double t, const std::vector<double>&) { return Control{t < 0.5 ? 0.0 : 4.0}; };
  auto traj = simulate(builder, OccupationState({30, 10}, 0.025), p, 1.0, 3);
  // no events can fire before t = 0.5 (rate multiplier 0)
  for (std::size_t k = 0; k + 1 < traj.size(); ++k)
    if (traj.times[k] > 0.0 && traj.times[k] < 0.5) CHECK(traj.counts[k] == traj.counts[0]);
}
