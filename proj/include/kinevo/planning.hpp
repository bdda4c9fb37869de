#ifndef KINEVO_PLANNING_HPP
#define KINEVO_PLANNING_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kinevo/best_response.hpp"
#include "kinevo/common.hpp"
#include "kinevo/equilibria.hpp"
#include "kinevo/kinetic.hpp"
#include "kinevo/markov.hpp"

namespace kinevo {

/// Regular grid over the free coordinates (x_1..x_{d-1}) of the simplex; the
/// last coordinate is 1 - sum. Nodes whose free coordinates sum past 1 are
/// still stored so multilinear interpolation stays well defined; queries are
/// clamped onto the simplex first.
struct SimplexGrid {
  std::size_t d = 2;        // number of strategies, 2..4
  std::size_t m = 11;       // nodes per free axis

  std::size_t free_dims() const { return d - 1; }
  std::size_t num_nodes() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < free_dims(); ++k) n *= m;
    return n;
  }

  void validate() const {
    if (d < 2 || d > 4)
      throw std::invalid_argument("SimplexGrid: supports 2 <= d <= 4 strategies");
    if (m < 2) throw std::invalid_argument("SimplexGrid: need at least 2 nodes per axis");
  }

  double coord(std::size_t idx) const {
    return static_cast<double>(idx) / static_cast<double>(m - 1);
  }

  /// Multi-index of a flat node id, row-major with axis 0 slowest.
  std::vector<std::size_t> unflatten(std::size_t node) const {
    std::vector<std::size_t> mi(free_dims());
    for (std::size_t k = free_dims(); k-- > 0;) {
      mi[k] = node % m;
      node /= m;
    }
    return mi;
  }

  std::size_t flatten(const std::vector<std::size_t>& mi) const {
    std::size_t node = 0;
    for (std::size_t k = 0; k < free_dims(); ++k) node = node * m + mi[k];
    return node;
  }

  /// Full simplex point of a node; infeasible free sums are clamped.
  std::vector<double> point(std::size_t node) const {
    std::vector<std::size_t> mi = unflatten(node);
    std::vector<double> x(d, 0.0);
    double s = 0.0;
    for (std::size_t k = 0; k < free_dims(); ++k) {
      x[k] = coord(mi[k]);
      s += x[k];
    }
    if (s > 1.0) {
      for (std::size_t k = 0; k < free_dims(); ++k) x[k] /= s;
      s = 1.0;
    }
    x[d - 1] = 1.0 - s;
    return x;
  }

  /// Projects an arbitrary point onto the feasible query region: clamp each
  /// free coordinate to [0,1], then scale down if the free sum exceeds 1.
  std::vector<double> clamp_to_simplex(const std::vector<double>& x) const {
    std::vector<double> y(free_dims());
    double s = 0.0;
    for (std::size_t k = 0; k < free_dims(); ++k) {
      y[k] = std::clamp(x[k], 0.0, 1.0);
      s += y[k];
    }
    if (s > 1.0)
      for (double& v : y) v /= s;
    return y;
  }
};

/// Piecewise-multilinear value function on a SimplexGrid.
struct ValueTable {
  SimplexGrid grid;
  std::vector<double> values;

  static ValueTable zeros(SimplexGrid g) {
    g.validate();
    ValueTable t;
    t.grid = g;
    t.values.assign(g.num_nodes(), 0.0);
    return t;
  }

  static ValueTable tabulate(SimplexGrid g,
                             const std::function<double(const std::vector<double>&)>& f) {
    ValueTable t = zeros(g);
    for (std::size_t n = 0; n < t.values.size(); ++n) t.values[n] = f(g.point(n));
    return t;
  }

  /// Multilinear interpolation at a (possibly off-simplex) point.
  double operator()(const std::vector<double>& x) const {
    std::vector<double> y = grid.clamp_to_simplex(x);
    std::size_t nf = grid.free_dims();
    std::vector<std::size_t> base(nf);
    std::vector<double> frac(nf);
    for (std::size_t k = 0; k < nf; ++k) {
      double pos = y[k] * static_cast<double>(grid.m - 1);
      std::size_t lo = static_cast<std::size_t>(std::floor(pos));
      if (lo >= grid.m - 1) lo = grid.m - 2;
      base[k] = lo;
      frac[k] = pos - static_cast<double>(lo);
    }
    double out = 0.0;
    std::vector<std::size_t> mi(nf);
    for (std::size_t corner = 0; corner < (1ULL << nf); ++corner) {
      double w = 1.0;
      for (std::size_t k = 0; k < nf; ++k) {
        bool hi = corner & (1ULL << k);
        mi[k] = base[k] + (hi ? 1 : 0);
        w *= hi ? frac[k] : 1.0 - frac[k];
      }
      if (w != 0.0) out += w * values[grid.flatten(mi)];
    }
    return out;
  }

  double sup_dist_to(const ValueTable& other) const {
    double s = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n)
      s = std::max(s, std::abs(values[n] - other.values[n]));
    return s;
  }
};

/// The greedy control at each node; ties go to the action listed first.
struct PolicyTable {
  SimplexGrid grid;
  std::vector<Control> actions;
};

/// Enumerated product grid over the control box.
inline std::vector<Control> control_grid(const std::vector<std::pair<double, double>>& box,
                                         std::size_t points_per_axis) {
  if (points_per_axis < 1) throw std::invalid_argument("control_grid: empty grid");
  std::vector<Control> out{Control{}};
  for (const auto& [lo, hi] : box) {
    std::vector<Control> next;
    for (const Control& prefix : out)
      for (std::size_t k = 0; k < points_per_axis; ++k) {
        Control c = prefix;
        double v = points_per_axis == 1
                       ? 0.5 * (lo + hi)
                       : lo + (hi - lo) * static_cast<double>(k) /
                                 static_cast<double>(points_per_axis - 1);
        c.push_back(v);
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

struct ShapleySpec {
  double tau = 0.1;                // per-step planning horizon
  std::size_t b_points = 17;       // grid nodes per control axis
  bool refine = true;              // golden refinement around the grid argmax
  double discount = 1.0;           // beta = 1 for the finite-horizon operator
  StepSpec step;                   // inner ODE settings
};

/// One Shapley step: (SV)(x) = max_b [ tau B(x, b) + beta V(X(tau, x, b)) ],
/// with X the kinetic flow under the frozen control b.
inline std::pair<ValueTable, PolicyTable> shapley_apply(const ValueTable& V,
                                                        const PrincipalModel& principal,
                                                        const DriftSpec& drift,
                                                        const ShapleySpec& spec) {
  if (spec.tau <= 0.0) throw std::invalid_argument("shapley_apply: tau must be positive");
  std::vector<Control> actions = control_grid(principal.control_box, spec.b_points);
  ValueTable out = V;
  PolicyTable pol;
  pol.grid = V.grid;
  pol.actions.resize(V.values.size());

  for (std::size_t node = 0; node < V.values.size(); ++node) {
    std::vector<double> x = V.grid.point(node);
    auto q_value = [&](const Control& b) {
      std::vector<double> xt =
          integrate_to(drift, x, fixed_principal(b), spec.tau, spec.step);
      return spec.tau * principal.reward(x, b) + spec.discount * V(xt);
    };
    double best = q_value(actions[0]);
    std::size_t best_i = 0;
    for (std::size_t a = 1; a < actions.size(); ++a) {
      double q = q_value(actions[a]);
      if (q > best) {
        best = q;
        best_i = a;
      }
    }
    Control b_star = actions[best_i];
    if (spec.refine && spec.b_points > 1) {
      for (std::size_t axis = 0; axis < principal.control_box.size(); ++axis) {
        auto [lo, hi] = principal.control_box[axis];
        double h = (hi - lo) / static_cast<double>(spec.b_points - 1);
        auto line = [&](double v) {
          Control bb = b_star;
          bb[axis] = v;
          return q_value(bb);
        };
        b_star[axis] = detail::golden_max(line, std::max(lo, b_star[axis] - h),
                                          std::min(hi, b_star[axis] + h), 1e-8);
      }
      best = std::max(best, q_value(b_star));
    }
    out.values[node] = best;
    pol.actions[node] = b_star;
  }
  return {std::move(out), std::move(pol)};
}

/// n backward steps of the Shapley operator; policies[k] is the greedy control
/// with k+1 steps to go.
struct ValueIterationResult {
  ValueTable value;
  std::vector<PolicyTable> policies;  // policies[0]: one step to go
  std::vector<double> sup_changes;
};

inline ValueIterationResult value_iterate(const ValueTable& V0, const PrincipalModel& principal,
                                          const DriftSpec& drift, const ShapleySpec& spec,
                                          std::size_t n_steps) {
  ValueIterationResult res;
  res.value = V0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    auto [next, pol] = shapley_apply(res.value, principal, drift, spec);
    res.sup_changes.push_back(next.sup_dist_to(res.value));
    res.value = std::move(next);
    res.policies.push_back(std::move(pol));
  }
  return res;
}

/// Fixed point of the discounted operator, iterated until the sup change drops
/// below tol * (1 - beta). Three consecutive contraction-ratio violations are
/// reported as a numerical error.
struct DiscountedResult {
  ValueTable value;
  PolicyTable policy;
  std::vector<double> sup_changes;
  std::size_t sweeps = 0;
};

inline DiscountedResult discounted_value(const ValueTable& V0, const PrincipalModel& principal,
                                         const DriftSpec& drift, ShapleySpec spec, double beta,
                                         double value_tol = 1e-8,
                                         std::size_t max_sweeps = 10000) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("discounted_value: beta must lie in (0,1)");
  spec.discount = beta;
  DiscountedResult res;
  res.value = V0;
  double stop = value_tol * (1.0 - beta);
  std::size_t bad_ratio_streak = 0;
  for (std::size_t k = 0; k < max_sweeps; ++k) {
    auto [next, pol] = shapley_apply(res.value, principal, drift, spec);
    double change = next.sup_dist_to(res.value);
    // ratio measurements below the change floor are dominated by roundoff in
    // the table values; skip them
    if (!res.sup_changes.empty() && res.sup_changes.back() > 1e-9) {
      double ratio = change / res.sup_changes.back();
      bad_ratio_streak = ratio > beta + 1e-3 ? bad_ratio_streak + 1 : 0;
      if (bad_ratio_streak >= 3)
        throw std::runtime_error(
            "discounted_value: contraction ratio exceeded beta on 3 consecutive sweeps");
    }
    res.sup_changes.push_back(change);
    res.value = std::move(next);
    res.policy = std::move(pol);
    res.sweeps = k + 1;
    if (change < stop) return res;
  }
  throw std::runtime_error("discounted_value: did not converge within the sweep budget");
}

// ---------------------------------------------------------------------------
// Continuous control: the state is the pair (x, b) and the principal chooses
// the steering rate u with bdot = u, |u| bounded per axis.
// ---------------------------------------------------------------------------

/// Value function over the joint (x, b) grid: SimplexGrid times a regular
/// per-axis control grid.
struct JointValueTable {
  SimplexGrid xgrid;
  std::vector<std::pair<double, double>> control_box;
  std::size_t b_points = 9;
  std::vector<double> values;  // row-major: x node slow, b node fast

  std::size_t b_nodes() const {
    std::size_t n = 1;
    for (std::size_t k = 0; k < control_box.size(); ++k) n *= b_points;
    return n;
  }

  static JointValueTable zeros(SimplexGrid g, std::vector<std::pair<double, double>> box,
                               std::size_t b_points) {
    g.validate();
    if (b_points < 2)
      throw std::invalid_argument("JointValueTable: need at least 2 control nodes per axis");
    JointValueTable t;
    t.xgrid = g;
    t.control_box = std::move(box);
    t.b_points = b_points;
    t.values.assign(g.num_nodes() * t.b_nodes(), 0.0);
    return t;
  }

  Control b_point(std::size_t bnode) const {
    std::size_t r = control_box.size();
    Control b(r);
    for (std::size_t k = r; k-- > 0;) {
      std::size_t idx = bnode % b_points;
      bnode /= b_points;
      auto [lo, hi] = control_box[k];
      b[k] = lo + (hi - lo) * static_cast<double>(idx) / static_cast<double>(b_points - 1);
    }
    return b;
  }

  double operator()(const std::vector<double>& x, const Control& b) const {
    // separable multilinear interpolation: x axes then b axes
    std::vector<double> y = xgrid.clamp_to_simplex(x);
    std::size_t nf = xgrid.free_dims();
    std::size_t r = control_box.size();
    std::vector<std::size_t> xbase(nf), bbase(r);
    std::vector<double> xfrac(nf), bfrac(r);
    for (std::size_t k = 0; k < nf; ++k) {
      double pos = y[k] * static_cast<double>(xgrid.m - 1);
      std::size_t lo = static_cast<std::size_t>(std::floor(pos));
      if (lo >= xgrid.m - 1) lo = xgrid.m - 2;
      xbase[k] = lo;
      xfrac[k] = pos - static_cast<double>(lo);
    }
    for (std::size_t k = 0; k < r; ++k) {
      auto [lo, hi] = control_box[k];
      double u = hi > lo ? std::clamp((b[k] - lo) / (hi - lo), 0.0, 1.0) : 0.0;
      double pos = u * static_cast<double>(b_points - 1);
      std::size_t cell = static_cast<std::size_t>(std::floor(pos));
      if (cell >= b_points - 1) cell = b_points - 2;
      bbase[k] = cell;
      bfrac[k] = pos - static_cast<double>(cell);
    }
    double out = 0.0;
    std::vector<std::size_t> xmi(nf);
    for (std::size_t cx = 0; cx < (1ULL << nf); ++cx) {
      double wx = 1.0;
      for (std::size_t k = 0; k < nf; ++k) {
        bool hi = cx & (1ULL << k);
        xmi[k] = xbase[k] + (hi ? 1 : 0);
        wx *= hi ? xfrac[k] : 1.0 - xfrac[k];
      }
      if (wx == 0.0) continue;
      std::size_t xflat = xgrid.flatten(xmi) * b_nodes();
      for (std::size_t cb = 0; cb < (1ULL << r); ++cb) {
        double w = wx;
        std::size_t bflat = 0;
        for (std::size_t k = 0; k < r; ++k) {
          bool hi = cb & (1ULL << k);
          bflat = bflat * b_points + bbase[k] + (hi ? 1 : 0);
          w *= hi ? bfrac[k] : 1.0 - bfrac[k];
        }
        if (w != 0.0) out += w * values[xflat + bflat];
      }
    }
    return out;
  }
};

struct ControlRateSpec {
  std::vector<std::pair<double, double>> u_box;  // per-axis steering-rate bounds
  std::size_t u_points = 5;
};

/// Backward iteration of the joint operator
///   V_{k+1}(x, b) = max_u [ tau J(x, b, u) + V_k(X(tau, x, b), clamp(b + u tau)) ].
inline JointValueTable control_value_iterate(
    const JointValueTable& V0,
    const std::function<double(const std::vector<double>& x, const Control& b,
                               const Control& u)>& running_reward,
    const DriftSpec& drift, double tau, const ControlRateSpec& rates, std::size_t n_steps,
    const StepSpec& step = {}) {
  if (tau <= 0.0) throw std::invalid_argument("control_value_iterate: tau must be positive");
  std::vector<Control> u_grid = control_grid(rates.u_box, rates.u_points);
  JointValueTable V = V0;
  std::size_t bn = V.b_nodes();
  auto clamp_b = [&](Control b) {
    for (std::size_t k = 0; k < b.size(); ++k)
      b[k] = std::clamp(b[k], V.control_box[k].first, V.control_box[k].second);
    return b;
  };
  for (std::size_t stepk = 0; stepk < n_steps; ++stepk) {
    JointValueTable next = V;
    for (std::size_t xn = 0; xn < V.xgrid.num_nodes(); ++xn) {
      std::vector<double> x = V.xgrid.point(xn);
      for (std::size_t bnode = 0; bnode < bn; ++bnode) {
        Control b = V.b_point(bnode);
        std::vector<double> xt = integrate_to(drift, x, fixed_principal(b), tau, step);
        double best = -std::numeric_limits<double>::infinity();
        for (const Control& u : u_grid) {
          Control b_next = b;
          for (std::size_t k = 0; k < b_next.size(); ++k) b_next[k] += u[k] * tau;
          double q = tau * running_reward(x, b, u) + V(xt, clamp_b(b_next));
          best = std::max(best, q);
        }
        next.values[xn * bn + bnode] = best;
      }
    }
    V = std::move(next);
  }
  return V;
}

// ---------------------------------------------------------------------------
// Finite-N Shapley step: the flow is replaced by the Markov chain and the
// continuation value is a Monte-Carlo average.
// ---------------------------------------------------------------------------
struct MarkovShapleySpec {
  double tau = 0.1;
  std::size_t b_points = 9;
  long long N = 100;
  std::size_t n_runs = 200;
  std::uint64_t master_seed = 1;
  std::size_t n_threads = 1;
  double discount = 1.0;
};

/// (S[N] V)(x) = max_b [ tau B(x_N, b) + beta E V(X_N(tau)) ], x snapped onto
/// the N-lattice. Seeds derive deterministically from (node, action).
inline std::pair<ValueTable, PolicyTable> shapley_apply_markov(const ValueTable& V,
                                                               const PrincipalModel& principal,
                                                               const TransitionBuilder& builder,
                                                               const MarkovShapleySpec& spec) {
  std::vector<Control> actions = control_grid(principal.control_box, spec.b_points);
  ValueTable out = V;
  PolicyTable pol;
  pol.grid = V.grid;
  pol.actions.resize(V.values.size());
  auto g = [&](const std::vector<double>& xs) { return V(xs); };

  for (std::size_t node = 0; node < V.values.size(); ++node) {
    SimplexState snapped =
        rational_approximation(SimplexState(V.grid.point(node)), spec.N);
    std::vector<long long> counts(snapped.dim());
    for (std::size_t j = 0; j < snapped.dim(); ++j)
      counts[j] = std::llround(snapped[j] * static_cast<double>(spec.N));
    OccupationState x0(counts, 1.0 / static_cast<double>(spec.N));

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      std::uint64_t seed =
          derive_seed(spec.master_seed, node * actions.size() + a);
      EnsembleResult ens = ensemble_mean(builder, x0, fixed_principal(actions[a]), spec.tau, g,
                                         spec.n_runs, seed, spec.n_threads);
      double q = spec.tau * principal.reward(snapped.weights, actions[a]) +
                 spec.discount * ens.mean;
      if (q > best) {
        best = q;
        best_i = a;
      }
    }
    out.values[node] = best;
    pol.actions[node] = actions[best_i];
  }
  return {std::move(out), std::move(pol)};
}

}  // namespace kinevo

#endif  // KINEVO_PLANNING_HPP
