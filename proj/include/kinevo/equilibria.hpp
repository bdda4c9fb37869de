#ifndef KINEVO_EQUILIBRIA_HPP
#define KINEVO_EQUILIBRIA_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "kinevo/best_response.hpp"
#include "kinevo/common.hpp"
#include "kinevo/kinetic.hpp"
#include "kinevo/payoff.hpp"

namespace kinevo {

/// A singular point of the replicator-type dynamics: zero coordinates exactly
/// on I, equal rewards across the support.
struct EquilibriumRecord {
  SimplexState x;
  std::vector<std::size_t> support;   // complement of the zero set I
  double residual = 0.0;              // max |drift coordinate|
  double payoff_spread = 0.0;         // max |R_i - R_j| over the support at b*(x)
  std::optional<double> nash_eps;
  bool in_omega_hat = false;          // off-support rewards do not exceed on-support ones
};

/// max_j |drift_replicator(x)_j| at the principal's resolved control.
inline double residual(const SimplexState& x, const PayoffModel& payoff,
                       const PrincipalModel& principal, double kappa = 1.0) {
  Control b = resolve_control(principal, 0.0, x.weights);
  std::vector<double> v;
  drift_replicator(x.weights, payoff, b, kappa, v);
  return sup_norm(v);
}

struct FixedPointOptions {
  double kappa = 1.0;
  std::size_t num_starts = 32;
  std::size_t max_newton_iters = 60;
  std::size_t max_halvings = 40;
  double residual_tol = 1e-9;
  double dedup_dist = 1e-6;
  double support_tol = tol::support;
  std::uint64_t seed = 20210915;
};

namespace detail {

inline std::vector<double> dirichlet_point(std::mt19937_64& rng,
                                           const std::vector<std::size_t>& support,
                                           std::size_t d) {
  std::vector<double> x(d, 0.0);
  double s = 0.0;
  for (std::size_t j : support) {
    double u = std::max(1e-12, uniform01(rng));
    double e = -std::log(u);
    x[j] = e;
    s += e;
  }
  for (std::size_t j : support) x[j] /= s;
  return x;
}

}  // namespace detail

/// Solves {x_k = 0 on I; reward equality across the support; sum x = 1} by a
/// damped Newton iteration from Dirichlet-random interior starts. Returned
/// records have drift residual below residual_tol and are deduplicated.
inline std::vector<EquilibriumRecord> find_fixed_points(const PayoffModel& payoff,
                                                        const PrincipalModel& principal,
                                                        const std::vector<std::size_t>& zero_set,
                                                        const FixedPointOptions& opts = {}) {
  std::size_t d = payoff.num_strategies();
  std::vector<bool> in_I(d, false);
  for (std::size_t k : zero_set) {
    if (k >= d) throw std::invalid_argument("find_fixed_points: zero-set index out of range");
    in_I[k] = true;
  }
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < d; ++j)
    if (!in_I[j]) support.push_back(j);
  if (support.empty())
    throw std::invalid_argument("find_fixed_points: zero set must be a proper subset");

  std::size_t j0 = support[0];
  auto system = [&](const std::vector<double>& x, std::vector<double>& F) {
    Control b = resolve_control(principal, 0.0, x);
    std::vector<double> r = payoff.rewards(x, b);
    F.assign(d, 0.0);
    std::size_t eq = 0;
    for (std::size_t k = 0; k < d; ++k)
      if (in_I[k]) F[eq++] = x[k];
    for (std::size_t j : support)
      if (j != j0) F[eq++] = r[j] - r[j0];
    double s = -1.0;
    for (double xi : x) s += xi;
    F[eq++] = s;
  };

  std::mt19937_64 rng(opts.seed);
  std::vector<EquilibriumRecord> found;

  for (std::size_t start = 0; start < opts.num_starts; ++start) {
    std::vector<double> x =
        support.size() == 1 ? SimplexState::vertex(d, j0).weights
                            : detail::dirichlet_point(rng, support, d);
    std::vector<double> F, F2, xt;
    system(x, F);
    double fnorm = sup_norm(F);
    bool converged = fnorm < 1e-12;

    for (std::size_t iter = 0; iter < opts.max_newton_iters && !converged; ++iter) {
      // finite-difference Jacobian
      std::vector<std::vector<double>> J(d, std::vector<double>(d));
      double eps = 1e-7;
      for (std::size_t c = 0; c < d; ++c) {
        xt = x;
        xt[c] += eps;
        system(xt, F2);
        for (std::size_t rrow = 0; rrow < d; ++rrow) J[rrow][c] = (F2[rrow] - F[rrow]) / eps;
      }
      // solve J dx = -F by Gaussian elimination with partial pivoting
      std::vector<double> rhs(d);
      for (std::size_t i = 0; i < d; ++i) rhs[i] = -F[i];
      bool singular = false;
      for (std::size_t col = 0; col < d; ++col) {
        std::size_t piv = col;
        for (std::size_t rrow = col + 1; rrow < d; ++rrow)
          if (std::abs(J[rrow][col]) > std::abs(J[piv][col])) piv = rrow;
        if (std::abs(J[piv][col]) < 1e-14) {
          singular = true;
          break;
        }
        std::swap(J[col], J[piv]);
        std::swap(rhs[col], rhs[piv]);
        for (std::size_t rrow = col + 1; rrow < d; ++rrow) {
          double f = J[rrow][col] / J[col][col];
          for (std::size_t c = col; c < d; ++c) J[rrow][c] -= f * J[col][c];
          rhs[rrow] -= f * rhs[col];
        }
      }
      if (singular) break;
      std::vector<double> dx(d);
      for (std::size_t i = d; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t c = i + 1; c < d; ++c) s -= J[i][c] * dx[c];
        dx[i] = s / J[i][i];
      }
      // damping: halve until the residual decreases
      double lambda = 1.0;
      bool improved = false;
      for (std::size_t h = 0; h <= opts.max_halvings; ++h) {
        xt = x;
        for (std::size_t i = 0; i < d; ++i) xt[i] += lambda * dx[i];
        system(xt, F2);
        if (sup_norm(F2) < fnorm) {
          x = xt;
          F = F2;
          fnorm = sup_norm(F2);
          improved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!improved) break;
      converged = fnorm < 1e-13;
    }
    if (fnorm > 1e-10) continue;

    // feasibility and classification
    bool feasible = true;
    SimplexState xs;
    xs.weights = x;
    for (double& c : xs.weights) {
      if (c < -1e-9) feasible = false;
      if (c < 0.0) c = 0.0;
    }
    if (!feasible) continue;
    xs.renormalize();
    bool zeros_ok = true;
    for (std::size_t k = 0; k < d; ++k) {
      if (in_I[k] && xs[k] >= opts.support_tol) zeros_ok = false;
      if (!in_I[k] && xs[k] < opts.support_tol) zeros_ok = false;
    }
    if (!zeros_ok) continue;

    double res = residual(xs, payoff, principal, opts.kappa);
    if (res >= opts.residual_tol) continue;

    bool dup = false;
    for (const auto& rec : found)
      if (sup_dist(rec.x.weights, xs.weights) < opts.dedup_dist) dup = true;
    if (dup) continue;

    EquilibriumRecord rec;
    rec.x = xs;
    rec.support = support;
    rec.residual = res;
    Control b = resolve_control(principal, 0.0, xs.weights);
    std::vector<double> r = payoff.rewards(xs.weights, b);
    double lo = r[support[0]], hi = r[support[0]];
    for (std::size_t j : support) {
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
    rec.payoff_spread = hi - lo;
    rec.in_omega_hat = true;
    for (std::size_t k : zero_set)
      if (r[k] > lo + 1e-9) rec.in_omega_hat = false;
    found.push_back(std::move(rec));
  }
  return found;
}

/// Largest-remainder rounding of x onto the N-lattice of the simplex; each
/// coordinate moves by at most 1/N, ties broken toward the lower index.
inline SimplexState rational_approximation(const SimplexState& x, long long N) {
  if (N < static_cast<long long>(x.dim()))
    throw std::invalid_argument("rational_approximation: need N >= d");
  std::size_t d = x.dim();
  std::vector<long long> n(d);
  std::vector<double> frac(d);
  long long assigned = 0;
  for (std::size_t j = 0; j < d; ++j) {
    double scaled = x[j] * static_cast<double>(N);
    n[j] = static_cast<long long>(std::floor(scaled + 1e-12));
    frac[j] = scaled - static_cast<double>(n[j]);
    assigned += n[j];
  }
  long long missing = N - assigned;
  std::vector<std::size_t> order(d);
  for (std::size_t j = 0; j < d; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (long long m = 0; m < missing; ++m) n[order[static_cast<std::size_t>(m) % d]] += 1;
  SimplexState out;
  out.weights.resize(d);
  for (std::size_t j = 0; j < d; ++j)
    out.weights[j] = static_cast<double>(n[j]) / static_cast<double>(N);
  return out;
}

/// Smallest eps such that no unilateral deviation gains more than eps, by
/// exhaustive enumeration over occupied i and all j != i at b_N = b*(x_N).
inline double check_epsilon_nash(const SimplexState& x_N, const PayoffModel& payoff,
                                 const PrincipalModel& principal, long long N) {
  std::size_t d = x_N.dim();
  std::vector<long long> n(d);
  for (std::size_t j = 0; j < d; ++j) {
    double scaled = x_N[j] * static_cast<double>(N);
    n[j] = std::llround(scaled);
    if (std::abs(scaled - static_cast<double>(n[j])) > 1e-6)
      throw std::invalid_argument("check_epsilon_nash: state is not on the N-lattice");
  }
  Control b = resolve_control(principal, 0.0, x_N.weights);
  std::vector<double> r = payoff.rewards(x_N.weights, b);
  double eps = 0.0;
  double inv_n = 1.0 / static_cast<double>(N);
  std::vector<double> dev = x_N.weights;
  for (std::size_t i = 0; i < d; ++i) {
    if (n[i] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == i) continue;
      dev[i] -= inv_n;
      dev[j] += inv_n;
      double gain = payoff.reward(j, dev, b) - r[i];
      dev[i] += inv_n;
      dev[j] -= inv_n;
      eps = std::max(eps, gain);
    }
  }
  return eps;
}

/// Numerical bound on sup_{j,b} Lip(R_j(., b)): central differences over a
/// fixed probe of simplex points, inflated by 5 percent.
inline double estimate_lipschitz(const PayoffModel& payoff, const Control& b,
                                 std::size_t points_per_axis = 101,
                                 std::uint64_t seed = 424242) {
  std::size_t d = payoff.num_strategies();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> all(d);
  for (std::size_t j = 0; j < d; ++j) all[j] = j;
  double lip = 0.0;
  double h = 1e-5;
  for (std::size_t p = 0; p < points_per_axis; ++p) {
    std::vector<double> x = detail::dirichlet_point(rng, all, d);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        double g = (payoff.reward(j, xp, b) - payoff.reward(j, xm, b)) / (2.0 * h);
        lip = std::max(lip, std::abs(g));
      }
  }
  return 1.05 * lip;
}

struct TurnpikeCandidate {
  Control b;
  EquilibriumRecord record;
  double principal_value = 0.0;
};

/// For each b on the grid, finds the fixed points X[b] (best response
/// bypassed), evaluates B there and returns candidates sorted by B.
inline std::vector<TurnpikeCandidate> turnpike_scan(const PayoffModel& payoff,
                                                    const PrincipalModel& principal,
                                                    const std::vector<Control>& b_grid,
                                                    const FixedPointOptions& opts = {}) {
  std::size_t d = payoff.num_strategies();
  std::vector<TurnpikeCandidate> out;
  for (const Control& b : b_grid) {
    PrincipalModel frozen = principal;
    frozen.mode = PrincipalMode::fixed;
    frozen.fixed_b = b;
    // sweep every proper zero set
    for (std::size_t mask = 0; mask + 1 < (1ULL << d); ++mask) {
      std::vector<std::size_t> zero_set;
      for (std::size_t k = 0; k < d; ++k)
        if (mask & (1ULL << k)) zero_set.push_back(k);
      for (auto& rec : find_fixed_points(payoff, frozen, zero_set, opts)) {
        TurnpikeCandidate cand;
        cand.b = b;
        cand.principal_value = principal.reward(rec.x.weights, b);
        cand.record = std::move(rec);
        out.push_back(std::move(cand));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.principal_value > b.principal_value;
  });
  return out;
}

}  // namespace kinevo

#endif  // KINEVO_EQUILIBRIA_HPP
