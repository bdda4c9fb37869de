#ifndef KINEVO_MARKOV_HPP
#define KINEVO_MARKOV_HPP

#include <atomic>
#include <cmath>
#include <mutex>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "kinevo/best_response.hpp"
#include "kinevo/common.hpp"
#include "kinevo/kernels.hpp"
#include "kinevo/payoff.hpp"

namespace kinevo {

/// One off-diagonal row of the generator: a sparse integer state change and
/// its non-negative rate.
struct Transition {
  std::vector<std::pair<std::size_t, int>> delta;  // (index, count change)
  double rate = 0.0;
};

struct TransitionList {
  std::vector<Transition> entries;
  double total_rate = 0.0;
  double blocked_rate = 0.0;        // rate mass suppressed by the J_max truncation
  std::size_t infeasible_count = 0; // entries whose rate was forced to 0

  void push(Transition t) {
    if (t.rate <= 0.0) return;
    total_rate += t.rate;
    entries.push_back(std::move(t));
  }
};

using TransitionBuilder =
    std::function<TransitionList(const OccupationState& state, const Control& b)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;        // scaled states x
  std::vector<Control> controls;
  std::vector<std::vector<long long>> counts;     // raw occupations (stochastic runs only)
  double blocked_rate_max = 0.0;

  std::size_t size() const { return times.size(); }
  const std::vector<double>& final_state() const { return states.back(); }
};

inline bool entry_feasible(const Transition& t, const std::vector<long long>& counts) {
  for (auto [idx, dc] : t.delta)
    if (dc < 0 && counts[idx] + dc < 0) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Pairwise imitation: a pair (i, j) meets at rate kappa/N n_i n_j and the
// lower-reward member copies the better strategy with intensity R_j - R_i.
// ---------------------------------------------------------------------------
inline TransitionList build_pairwise(const OccupationState& state, const PayoffModel& payoff,
                                     const Control& b, double kappa) {
  if (kappa <= 0.0) throw std::invalid_argument("build_pairwise: kappa must be positive");
  long long N = state.total();
  if (N == 0) throw std::invalid_argument("build_pairwise: no agents");
  TransitionList list;
  if (N < 2) return list;
  std::size_t d = payoff.num_strategies();
  std::vector<double> x(d, 0.0);
  for (std::size_t i = 0; i < d && i < state.counts.size(); ++i)
    x[i] = static_cast<double>(state.counts[i]) / static_cast<double>(N);
  std::vector<double> r = payoff.rewards(x, b);
  for (std::size_t i = 0; i < d; ++i) {
    if (state.counts[i] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (j == i || state.counts[j] == 0) continue;
      double dr = r[j] - r[i];
      if (dr <= 0.0) continue;
      Transition t;
      t.delta = {{i, -1}, {j, +1}};
      t.rate = kappa / static_cast<double>(N) * static_cast<double>(state.counts[i]) *
               static_cast<double>(state.counts[j]) * dr;
      list.push(std::move(t));
    }
  }
  return list;
}

// ---------------------------------------------------------------------------
// k-th order interaction: groups of up to K distinct occupied states meet at
// rate N kappa Pi_I prod x_i and all members adopt the best strategy in the
// group (ties broken toward the highest index).
// ---------------------------------------------------------------------------

/// Symmetric group rate Pi(R_{i_1}, ..., R_{i_k}); must vanish when all
/// rewards coincide.
using GroupRate = std::function<double(const std::vector<double>& rewards)>;

/// Default group rate: the reward spread max_l R_l - min_l R_l.
inline GroupRate spread_group_rate() {
  return [](const std::vector<double>& r) {
    double lo = r[0], hi = r[0];
    for (double v : r) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  };
}

namespace detail {
template <typename Visit>
inline void for_each_subset(const std::vector<std::size_t>& items, std::size_t k, Visit&& visit) {
  std::vector<std::size_t> pick(k);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == k) {
      visit(pick);
      return;
    }
    for (std::size_t i = start; i + (k - depth) <= items.size(); ++i) {
      pick[depth] = items[i];
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
}
}  // namespace detail

inline TransitionList build_kth_order(const OccupationState& state, const PayoffModel& payoff,
                                      const Control& b, double kappa, std::size_t K,
                                      const GroupRate& group_rate) {
  std::size_t d = payoff.num_strategies();
  if (K < 2 || K > d) throw std::invalid_argument("build_kth_order: require 2 <= K <= d");
  long long N = state.total();
  if (N == 0) throw std::invalid_argument("build_kth_order: no agents");
  TransitionList list;
  std::vector<double> x(d, 0.0);
  for (std::size_t i = 0; i < d && i < state.counts.size(); ++i)
    x[i] = static_cast<double>(state.counts[i]) / static_cast<double>(N);
  std::vector<double> r = payoff.rewards(x, b);
  std::vector<std::size_t> occupied;
  for (std::size_t i = 0; i < d; ++i)
    if (state.counts[i] > 0) occupied.push_back(i);

  for (std::size_t k = 2; k <= K && k <= occupied.size(); ++k) {
    detail::for_each_subset(occupied, k, [&](const std::vector<std::size_t>& subset) {
      std::vector<double> rs(k);
      for (std::size_t l = 0; l < k; ++l) rs[l] = r[subset[l]];
      double pi = group_rate(rs);
      if (pi <= 0.0) return;
      // winner: max reward, ties toward the highest index
      std::size_t winner = subset[0];
      for (std::size_t idx : subset)
        if (r[idx] > r[winner] || (r[idx] == r[winner] && idx > winner)) winner = idx;
      Transition t;
      double prod = 1.0;
      for (std::size_t idx : subset) {
        prod *= x[idx];
        t.delta.emplace_back(idx, idx == winner ? static_cast<int>(k) - 1 : -1);
      }
      t.rate = static_cast<double>(N) * kappa * pi * prod;
      if (!entry_feasible(t, state.counts)) return;  // winner count >= 1 always holds
      list.push(std::move(t));
    });
  }
  return list;
}

// ---------------------------------------------------------------------------
// Multi-class interaction. The combined occupation vector stores class alpha's
// strategy-i count at flat index alpha*d + i.
// ---------------------------------------------------------------------------
inline std::size_t class_index(std::size_t alpha, std::size_t i, std::size_t d) {
  return alpha * d + i;
}

inline TransitionList build_multiclass(const OccupationState& state,
                                       const std::vector<PayoffModel>& payoffs,
                                       const Control& b, const ClassStructure& classes) {
  classes.validate();
  if (payoffs.size() != classes.num_classes)
    throw std::invalid_argument("build_multiclass: payoff count does not match class count");
  std::size_t d = payoffs[0].num_strategies();
  for (const auto& p : payoffs)
    if (p.num_strategies() != d)
      throw std::invalid_argument("build_multiclass: classes disagree on strategy count");
  if (state.counts.size() != d * classes.num_classes)
    throw std::invalid_argument("build_multiclass: state size != d * num_classes");

  TransitionList list;
  if (classes.comm_mode == CommMode::C1_no_communication) {
    for (std::size_t alpha = 0; alpha < classes.num_classes; ++alpha) {
      long long n_alpha = 0;
      for (std::size_t i = 0; i < d; ++i) n_alpha += state.counts[class_index(alpha, i, d)];
      if (n_alpha < 1) throw std::invalid_argument("build_multiclass: empty class");
      if (n_alpha < 2) continue;
      std::vector<double> x_alpha(d);
      for (std::size_t i = 0; i < d; ++i)
        x_alpha[i] = static_cast<double>(state.counts[class_index(alpha, i, d)]) /
                     static_cast<double>(n_alpha);
      std::vector<double> r = payoffs[alpha].rewards(x_alpha, b);
      double kap = classes.per_class_kappa[alpha];
      for (std::size_t i = 0; i < d; ++i) {
        if (state.counts[class_index(alpha, i, d)] == 0) continue;
        for (std::size_t j = 0; j < d; ++j) {
          if (j == i) continue;
          double dr = r[j] - r[i];
          if (dr <= 0.0) continue;
          Transition t;
          t.delta = {{class_index(alpha, i, d), -1}, {class_index(alpha, j, d), +1}};
          // N_alpha kappa_alpha x_i x_j dR with class-local frequencies
          t.rate = kap / static_cast<double>(n_alpha) *
                   static_cast<double>(state.counts[class_index(alpha, i, d)]) *
                   static_cast<double>(state.counts[class_index(alpha, j, d)]) * dr;
          list.push(std::move(t));
        }
      }
    }
  } else {
    // C2: players may switch both class and state; uniform scale h = 1/N.
    long long N = state.total();
    if (N == 0) throw std::invalid_argument("build_multiclass: no agents");
    std::vector<double> x(state.counts.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = static_cast<double>(state.counts[i]) / static_cast<double>(N);
    double kap = classes.per_class_kappa[0];
    std::vector<std::vector<double>> r(classes.num_classes);
    for (std::size_t alpha = 0; alpha < classes.num_classes; ++alpha)
      r[alpha] = payoffs[alpha].rewards(x, b);
    for (std::size_t beta = 0; beta < classes.num_classes; ++beta)
      for (std::size_t i = 0; i < d; ++i) {
        std::size_t src = class_index(beta, i, d);
        if (state.counts[src] == 0) continue;
        for (std::size_t alpha = 0; alpha < classes.num_classes; ++alpha)
          for (std::size_t j = 0; j < d; ++j) {
            std::size_t dst = class_index(alpha, j, d);
            if (dst == src) continue;
            double dr = r[alpha][j] - r[beta][i];
            if (dr <= 0.0) continue;
            if (state.counts[dst] == 0) continue;
            Transition t;
            t.delta = {{src, -1}, {dst, +1}};
            t.rate = kap / static_cast<double>(N) * static_cast<double>(state.counts[src]) *
                     static_cast<double>(state.counts[dst]) * dr;
            list.push(std::move(t));
          }
      }
  }
  return list;
}

// ---------------------------------------------------------------------------
// General birth / death / mutation / binary interaction channels on a
// truncated countable state space. Indices are 1-based states (sizes);
// unordered tuples are passed once with i1 <= i2, j1 <= j2 and the rate
// function gives the total intensity of that channel.
// ---------------------------------------------------------------------------
using StateRate = std::function<double(const std::vector<double>& x, const Control& b)>;

struct GrowthCoeffs {
  std::vector<std::tuple<std::size_t, StateRate>> birth;   // + e_j
  std::vector<std::tuple<std::size_t, StateRate>> death;   // - e_j
  std::vector<std::tuple<std::size_t, std::size_t, StateRate>> mutate;  // -e_i + e_j
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, StateRate>>
      split1;  // -e_i + e_j1 + e_j2
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, StateRate>>
      merge2;  // -e_i1 - e_i2 + e_j
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, StateRate>>
      regroup2;  // -e_i1 - e_i2 + e_j1 + e_j2
};

namespace detail {
inline void add_channel(TransitionList& list, const OccupationState& state,
                        std::vector<std::pair<std::size_t, int>> delta_1based, double coeff,
                        double h) {
  if (coeff < 0.0) throw std::invalid_argument("growth coefficient is negative");
  if (coeff == 0.0) return;
  double rate = coeff / h;
  Transition t;
  t.rate = rate;
  std::size_t jmax = state.max_index();
  for (auto [idx1, dc] : delta_1based) {
    if (idx1 < 1) throw std::invalid_argument("growth channel: indices are 1-based");
    if (idx1 > jmax) {
      if (dc > 0) {
        list.blocked_rate += rate;  // truncation: drop, keep the diagnostic
        return;
      }
      throw std::invalid_argument("growth channel: source index beyond truncation");
    }
    bool merged = false;
    for (auto& [i0, d0] : t.delta)
      if (i0 == idx1 - 1) {
        d0 += dc;
        merged = true;
        break;
      }
    if (!merged) t.delta.emplace_back(idx1 - 1, dc);
  }
  if (!entry_feasible(t, state.counts)) {
    list.infeasible_count += 1;  // conditional positivity: rate forced to 0
    return;
  }
  list.push(std::move(t));
}
}  // namespace detail

inline TransitionList build_growth(const OccupationState& state, const GrowthCoeffs& coeffs,
                                   const Control& b) {
  TransitionList list;
  std::vector<double> x = state.scaled();
  double h = state.scale;
  for (const auto& [j, f] : coeffs.birth)
    detail::add_channel(list, state, {{j, +1}}, f(x, b), h);
  for (const auto& [j, f] : coeffs.death)
    detail::add_channel(list, state, {{j, -1}}, f(x, b), h);
  for (const auto& [i, j, f] : coeffs.mutate)
    detail::add_channel(list, state, {{i, -1}, {j, +1}}, f(x, b), h);
  for (const auto& [i, j1, j2, f] : coeffs.split1)
    detail::add_channel(list, state, {{i, -1}, {j1, +1}, {j2, +1}}, f(x, b), h);
  for (const auto& [i1, i2, j, f] : coeffs.merge2)
    detail::add_channel(list, state, {{i1, -1}, {i2, -1}, {j, +1}}, f(x, b), h);
  for (const auto& [i1, i2, j1, j2, f] : coeffs.regroup2)
    detail::add_channel(list, state, {{i1, -1}, {i2, -1}, {j1, +1}, {j2, +1}}, f(x, b), h);
  return list;
}

// ---------------------------------------------------------------------------
// Markus-Lushnikov merge/split chain. Index i (0-based) holds coalitions of
// size i+1; merges above the truncation bound are suppressed into
// blocked_rate.
// ---------------------------------------------------------------------------
inline TransitionList build_coalition(const OccupationState& state, const KernelSpec& kernel,
                                      const Control& b) {
  TransitionList list;
  std::vector<double> x = state.scaled();
  double h = state.scale;
  std::size_t jmax = state.max_index();

  for (std::size_t i = 1; i <= jmax; ++i) {
    if (state.counts[i - 1] == 0) continue;
    for (std::size_t j = i; j <= jmax; ++j) {
      if (state.counts[j - 1] == 0) continue;
      double c = kernel.merge ? kernel.merge(i, j, x, b) : 0.0;
      if (c < 0.0) throw std::invalid_argument("coalition merge rate is negative");
      if (c == 0.0) continue;
      double rate;
      if (i == j) {
        // a coalition cannot merge with itself: x_i (x_i - h) pairs
        rate = c * x[i - 1] * (x[i - 1] - h) / h;
      } else {
        // the generator's double sum counts each unordered pair twice
        rate = 2.0 * c * x[i - 1] * x[j - 1] / h;
      }
      if (rate <= 0.0) continue;
      if (i + j > jmax) {
        list.blocked_rate += rate;
        continue;
      }
      Transition t;
      t.rate = rate;
      if (i == j)
        t.delta = {{i - 1, -2}, {i + j - 1, +1}};
      else
        t.delta = {{i - 1, -1}, {j - 1, -1}, {i + j - 1, +1}};
      if (!entry_feasible(t, state.counts)) {
        list.infeasible_count += 1;
        continue;
      }
      list.push(std::move(t));
    }
  }

  if (kernel.split) {
    for (std::size_t i = 2; i <= jmax; ++i) {
      if (state.counts[i - 1] == 0) continue;
      for (std::size_t j = 1; j < i; ++j) {
        double f = kernel.split(i, j, x, b);
        if (f < 0.0) throw std::invalid_argument("coalition split rate is negative");
        if (f == 0.0) continue;
        Transition t;
        t.rate = f * x[i - 1] / h;
        if (t.rate <= 0.0) continue;
        if (j == i - j)
          t.delta = {{i - 1, -1}, {j - 1, +2}};
        else
          t.delta = {{i - 1, -1}, {j - 1, +1}, {i - j - 1, +1}};
        list.push(std::move(t));
      }
    }
  }
  return list;
}

// ---------------------------------------------------------------------------
// Strategic preferential attachment: injection of fresh size-1 coalitions at
// rate alpha lambda / h, and size-weighted joins k -> k+1.
// ---------------------------------------------------------------------------
inline TransitionList build_attachment(const OccupationState& state, const AttachSpec& attach,
                                       const Control& b) {
  attach.validate();
  TransitionList list;
  std::vector<double> x = state.scaled();
  double h = state.scale;
  std::size_t jmax = state.max_index();
  double lam = attach.lambda(x, b);
  if (lam < 0.0) throw std::invalid_argument("attachment: lambda is negative");
  if (lam == 0.0) return list;

  if (attach.alpha > 0.0) {
    Transition t;
    t.delta = {{0, +1}};
    t.rate = attach.alpha * lam / h;
    list.push(std::move(t));
  }
  if (attach.alpha < 1.0) {
    for (std::size_t k = 1; k <= jmax; ++k) {
      if (state.counts[k - 1] == 0) continue;
      double rate = (1.0 - attach.alpha) * lam * static_cast<double>(k) * x[k - 1] / h;
      if (rate <= 0.0) continue;
      if (k == jmax) {
        list.blocked_rate += rate;
        continue;
      }
      Transition t;
      t.delta = {{k - 1, -1}, {k, +1}};
      t.rate = rate;
      list.push(std::move(t));
    }
  }
  return list;
}

// ---------------------------------------------------------------------------
// Exact event-driven simulation.
// ---------------------------------------------------------------------------
namespace detail {
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::string state_dump(const OccupationState& s) {
  std::ostringstream os;
  os << "counts = [";
  for (std::size_t i = 0; i < s.counts.size(); ++i) os << (i ? "," : "") << s.counts[i];
  os << "], scale = " << s.scale;
  return os.str();
}
}  // namespace detail

/// Runs the chain defined by `builder` from x0 until t_end, refreshing the
/// principal's control per her mode. Fully reproducible from the seed.
inline Trajectory simulate(const TransitionBuilder& builder, const OccupationState& x0,
                           const PrincipalModel& principal, double t_end, std::uint64_t seed) {
  if (t_end <= 0.0) throw std::invalid_argument("simulate: t_end must be positive");
  std::mt19937_64 rng(seed);
  OccupationState state = x0;
  Trajectory traj;
  double t = 0.0;
  long long policy_cell = -1;
  Control b;

  auto refresh_control = [&]() {
    if (principal.mode == PrincipalMode::policy) {
      long long cell = static_cast<long long>(std::floor(t / principal.policy_tau));
      if (cell != policy_cell) {
        policy_cell = cell;
        b = principal.clamp(principal.policy(static_cast<double>(cell) * principal.policy_tau,
                                             state.scaled()));
      }
    } else {
      b = resolve_control(principal, t, state.scaled());
    }
  };

  refresh_control();
  traj.times.push_back(0.0);
  traj.states.push_back(state.scaled());
  traj.counts.push_back(state.counts);
  traj.controls.push_back(b);

  while (t < t_end) {
    refresh_control();
    TransitionList list = builder(state, b);
    traj.blocked_rate_max = std::max(traj.blocked_rate_max, list.blocked_rate);
    if (!std::isfinite(list.total_rate))
      throw std::runtime_error("simulate: non-finite total rate at " +
                               detail::state_dump(state));
    if (list.total_rate <= 0.0) {
      // quiescent under the current control; a future policy cell may revive it
      if (principal.mode == PrincipalMode::policy) {
        double boundary = (static_cast<double>(policy_cell) + 1.0) * principal.policy_tau;
        if (boundary < t_end) {
          t = boundary;
          continue;
        }
      }
      break;  // absorbing state; pad below
    }

    double dt = -std::log1p(-detail::uniform01(rng)) / list.total_rate;
    double t_next = t + dt;
    if (principal.mode == PrincipalMode::policy) {
      // control refresh at the next cell boundary preempts the event clock
      double boundary =
          (static_cast<double>(policy_cell) + 1.0) * principal.policy_tau;
      if (boundary < t_next && boundary < t_end) {
        t = boundary;
        continue;
      }
    }
    if (t_next >= t_end) break;
    t = t_next;

    double u = detail::uniform01(rng) * list.total_rate;
    double acc = 0.0;
    const Transition* chosen = &list.entries.back();
    for (const Transition& e : list.entries) {
      acc += e.rate;
      if (u < acc) {
        chosen = &e;
        break;
      }
    }
    for (auto [idx, dc] : chosen->delta) {
      state.counts[idx] += dc;
      if (state.counts[idx] < 0)
        throw std::runtime_error("simulate: negative count after transition at " +
                                 detail::state_dump(state));
    }
    traj.times.push_back(t);
    traj.states.push_back(state.scaled());
    traj.counts.push_back(state.counts);
    traj.controls.push_back(b);
  }

  if (traj.times.back() < t_end) {
    traj.times.push_back(t_end);
    traj.states.push_back(state.scaled());
    traj.counts.push_back(state.counts);
    traj.controls.push_back(b);
  }
  return traj;
}

struct EnsembleResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_runs = 0;
  double blocked_rate_max = 0.0;
};

/// Monte-Carlo estimate of E g(X(t)) over deterministic per-replicate seeds.
/// The reduction order is fixed, so the result is independent of n_threads.
inline EnsembleResult ensemble_mean(const TransitionBuilder& builder, const OccupationState& x0,
                                    const PrincipalModel& principal, double t,
                                    const std::function<double(const std::vector<double>&)>& g,
                                    std::size_t n_runs, std::uint64_t master_seed,
                                    std::size_t n_threads = 1) {
  if (n_runs < 2) throw std::invalid_argument("ensemble_mean: need at least 2 runs");
  std::vector<double> values(n_runs);
  std::vector<double> blocked(n_runs, 0.0);
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t r = lo; r < hi; ++r) {
      try {
        Trajectory traj =
            simulate(builder, x0, principal, t, derive_seed(master_seed, r));
        values[r] = g(traj.final_state());
        blocked[r] = traj.blocked_rate_max;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error)
          error = std::make_exception_ptr(
              std::runtime_error("replicate " + std::to_string(r) + ": " + e.what()));
        return;
      }
    }
  };

  if (n_threads <= 1) {
    worker(0, n_runs);
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (n_runs + n_threads - 1) / n_threads;
    for (std::size_t w = 0; w < n_threads; ++w) {
      std::size_t lo = w * chunk, hi = std::min(n_runs, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  EnsembleResult res;
  res.n_runs = n_runs;
  double sum = 0.0;
  for (double v : values) sum += v;  // fixed replicate order
  res.mean = sum / static_cast<double>(n_runs);
  double ss = 0.0;
  for (double v : values) ss += (v - res.mean) * (v - res.mean);
  res.std_error = std::sqrt(ss / static_cast<double>(n_runs - 1) /
                            static_cast<double>(n_runs));
  for (double v : blocked) res.blocked_rate_max = std::max(res.blocked_rate_max, v);
  return res;
}

}  // namespace kinevo

#endif  // KINEVO_MARKOV_HPP
