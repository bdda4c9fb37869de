#ifndef KINEVO_KINETIC_HPP
#define KINEVO_KINETIC_HPP

#include <array>
#include <cmath>
#include <cstring>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kinevo/best_response.hpp"
#include "kinevo/common.hpp"
#include "kinevo/kernels.hpp"
#include "kinevo/markov.hpp"
#include "kinevo/payoff.hpp"

namespace kinevo {

enum class DriftFamily {
  replicator,
  kth_order,
  multiclass_C1,
  multiclass_C2,
  growth,
  smoluchowski,
  attachment,
  composite
};

/// Right-hand side of the kinetic limit: v = f(x, b).
using DriftFn =
    std::function<void(const std::vector<double>& x, const Control& b, std::vector<double>& v)>;

struct DriftSpec {
  DriftFamily family = DriftFamily::composite;
  DriftFn f;
  bool simplex = false;  // renormalize the sum to 1 after accepted steps

  std::vector<double> eval(const std::vector<double>& x, const Control& b) const {
    std::vector<double> v(x.size(), 0.0);
    f(x, b, v);
    return v;
  }
};

// ---------------------------------------------------------------------------
// Drifts
// ---------------------------------------------------------------------------

/// v_j = kappa x_j sum_i x_i (R_j - R_i); the generalized replicator field.
inline void drift_replicator(const std::vector<double>& x, const PayoffModel& payoff,
                             const Control& b, double kappa, std::vector<double>& v) {
  std::size_t d = payoff.num_strategies();
  std::vector<double> r = payoff.rewards(x, b);
  double rbar = 0.0;
  for (std::size_t i = 0; i < d; ++i) rbar += x[i] * r[i];
  double mass = 0.0;
  for (std::size_t i = 0; i < d; ++i) mass += x[i];
  v.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) v[j] = kappa * x[j] * (mass * r[j] - rbar);
}

inline DriftSpec replicator_drift(PayoffModel payoff, double kappa) {
  DriftSpec spec;
  spec.family = DriftFamily::replicator;
  spec.simplex = true;
  spec.f = [payoff = std::move(payoff), kappa](const std::vector<double>& x, const Control& b,
                                               std::vector<double>& v) {
    drift_replicator(x, payoff, b, kappa, v);
  };
  return spec;
}

/// k-th order interaction drift. The primed sum runs over groups I in which
/// m wins: every member has a strictly lower reward, or an equal reward and a
/// lower index.
inline void drift_kth_order(const std::vector<double>& x, const PayoffModel& payoff,
                            const Control& b, double kappa, std::size_t K,
                            const GroupRate& group_rate, std::vector<double>& v) {
  std::size_t d = payoff.num_strategies();
  if (K < 2 || K > d) throw std::invalid_argument("drift_kth_order: require 2 <= K <= d");
  std::vector<double> r = payoff.rewards(x, b);
  v.assign(d, 0.0);
  std::vector<std::size_t> others;
  others.reserve(d);
  for (std::size_t m = 0; m < d; ++m) {
    others.clear();
    for (std::size_t i = 0; i < d; ++i)
      if (i != m) others.push_back(i);
    double total = 0.0;
    for (std::size_t k = 2; k <= K; ++k) {
      detail::for_each_subset(others, k - 1, [&](const std::vector<std::size_t>& subset) {
        std::vector<double> rs(k);
        rs[0] = r[m];
        double prod = 1.0;
        bool m_wins = true;
        for (std::size_t l = 0; l < k - 1; ++l) {
          std::size_t i = subset[l];
          rs[l + 1] = r[i];
          prod *= x[i];
          if (!(r[i] < r[m] || (r[i] == r[m] && i < m))) m_wins = false;
        }
        double pi = group_rate(rs);
        if (pi == 0.0) return;
        if (m_wins) total += static_cast<double>(k) * pi * prod;
        total -= pi * prod;
      });
    }
    v[m] = kappa * x[m] * total;
  }
}

inline DriftSpec kth_order_drift(PayoffModel payoff, double kappa, std::size_t K,
                                 GroupRate group_rate) {
  DriftSpec spec;
  spec.family = DriftFamily::kth_order;
  spec.simplex = true;
  spec.f = [payoff = std::move(payoff), kappa, K, group_rate = std::move(group_rate)](
               const std::vector<double>& x, const Control& b, std::vector<double>& v) {
    drift_kth_order(x, payoff, b, kappa, K, group_rate, v);
  };
  return spec;
}

/// Multi-class drift over the flat layout alpha*d + i. C1 runs a per-class
/// replicator with prefactor kappa_alpha omega_alpha on class-local
/// frequencies; C2 couples all classes through cross-class payoff gaps.
inline void drift_multiclass(const std::vector<double>& x,
                             const std::vector<PayoffModel>& payoffs, const Control& b,
                             const ClassStructure& classes, std::vector<double>& v) {
  classes.validate();
  if (payoffs.size() != classes.num_classes)
    throw std::invalid_argument("drift_multiclass: payoff count does not match class count");
  std::size_t d = payoffs[0].num_strategies();
  if (x.size() != d * classes.num_classes)
    throw std::invalid_argument("drift_multiclass: state size != d * num_classes");
  v.assign(x.size(), 0.0);
  if (classes.comm_mode == CommMode::C1_no_communication) {
    // per-class replicator with prefactor kappa_alpha omega_alpha in the
    // class-local frequencies y = x_slice / omega_alpha; the class mass is
    // read off the state so the field is exactly dual to the generator
    std::vector<double> y(d);
    for (std::size_t alpha = 0; alpha < classes.num_classes; ++alpha) {
      double omega = 0.0;
      for (std::size_t i = 0; i < d; ++i) omega += x[class_index(alpha, i, d)];
      if (omega <= 0.0) continue;
      for (std::size_t i = 0; i < d; ++i) y[i] = x[class_index(alpha, i, d)] / omega;
      std::vector<double> r = payoffs[alpha].rewards(y, b);
      double pref = classes.per_class_kappa[alpha] * omega;
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += y[i] * (r[j] - r[i]);
        v[class_index(alpha, j, d)] = pref * y[j] * s;
      }
    }
  } else {
    double kap = classes.per_class_kappa[0];
    std::vector<std::vector<double>> r(classes.num_classes);
    for (std::size_t alpha = 0; alpha < classes.num_classes; ++alpha)
      r[alpha] = payoffs[alpha].rewards(x, b);
    for (std::size_t alpha = 0; alpha < classes.num_classes; ++alpha)
      for (std::size_t j = 0; j < d; ++j) {
        double s = 0.0;
        for (std::size_t beta = 0; beta < classes.num_classes; ++beta)
          for (std::size_t i = 0; i < d; ++i)
            s += x[class_index(beta, i, d)] * (r[alpha][j] - r[beta][i]);
        v[class_index(alpha, j, d)] = kap * x[class_index(alpha, j, d)] * s;
      }
  }
}

inline DriftSpec multiclass_drift(std::vector<PayoffModel> payoffs, ClassStructure classes) {
  DriftSpec spec;
  spec.family = classes.comm_mode == CommMode::C1_no_communication
                    ? DriftFamily::multiclass_C1
                    : DriftFamily::multiclass_C2;
  spec.simplex = false;  // C1 blocks each sum to 1 separately; handled via conservation
  spec.f = [payoffs = std::move(payoffs), classes = std::move(classes)](
               const std::vector<double>& x, const Control& b, std::vector<double>& v) {
    drift_multiclass(x, payoffs, b, classes, v);
  };
  return spec;
}

/// Kinetic limit of the general growth generator: each channel contributes
/// rate(x, b) times its integer state change.
inline void drift_growth(const std::vector<double>& x, const GrowthCoeffs& coeffs,
                         const Control& b, std::vector<double>& v) {
  std::size_t jmax = x.size();
  v.assign(jmax, 0.0);
  auto add = [&](std::size_t idx1, double amount) {
    if (idx1 >= 1 && idx1 <= jmax) v[idx1 - 1] += amount;
    // targets beyond the truncation are dropped, mirroring build_growth
  };
  for (const auto& [j, f] : coeffs.birth) add(j, f(x, b));
  for (const auto& [j, f] : coeffs.death) add(j, -f(x, b));
  for (const auto& [i, j, f] : coeffs.mutate) {
    double c = f(x, b);
    add(i, -c);
    add(j, c);
  }
  for (const auto& [i, j1, j2, f] : coeffs.split1) {
    double c = f(x, b);
    add(i, -c);
    add(j1, c);
    add(j2, c);
  }
  for (const auto& [i1, i2, j, f] : coeffs.merge2) {
    double c = f(x, b);
    add(i1, -c);
    add(i2, -c);
    add(j, c);
  }
  for (const auto& [i1, i2, j1, j2, f] : coeffs.regroup2) {
    double c = f(x, b);
    add(i1, -c);
    add(i2, -c);
    add(j1, c);
    add(j2, c);
  }
}

inline DriftSpec growth_drift(GrowthCoeffs coeffs) {
  DriftSpec spec;
  spec.family = DriftFamily::growth;
  spec.f = [coeffs = std::move(coeffs)](const std::vector<double>& x, const Control& b,
                                        std::vector<double>& v) {
    drift_growth(x, coeffs, b, v);
  };
  return spec;
}

/// Smoluchowski coagulation-fragmentation field on the truncated size range.
///   xdot_k = sum_{j<k} C_{j,k-j} x_j x_{k-j} - 2 sum_j C_{kj} x_j x_k
///          + 2 sum_{j>k} F_{jk} x_j - sum_{j<k} F_{kj} x_k
/// Coagulation gain beyond J_max is dropped; the dropped mass rate (weighted
/// by size) is reported through *mass_loss_rate when provided.
inline void drift_smoluchowski(const std::vector<double>& x, const KernelSpec& kernel,
                               const Control& b, std::vector<double>& v,
                               double* mass_loss_rate = nullptr) {
  std::size_t jmax = x.size();
  v.assign(jmax, 0.0);
  double lost = 0.0;
  for (std::size_t k = 1; k <= jmax; ++k) {
    double gain = 0.0;
    for (std::size_t j = 1; j < k; ++j)
      gain += kernel.merge(j, k - j, x, b) * x[j - 1] * x[k - j - 1];
    double loss = 0.0;
    for (std::size_t j = 1; j <= jmax; ++j)
      loss += kernel.merge(k, j, x, b) * x[j - 1];
    v[k - 1] += gain - 2.0 * loss * x[k - 1];
    // coagulation products with k + j > jmax leak mass out of the truncation
    if (mass_loss_rate) {
      for (std::size_t j = 1; j <= jmax; ++j)
        if (k + j > jmax)
          lost += static_cast<double>(k + j) * kernel.merge(k, j, x, b) * x[k - 1] * x[j - 1];
    }
  }
  if (kernel.split) {
    for (std::size_t k = 1; k <= jmax; ++k) {
      double gain = 0.0;
      for (std::size_t j = k + 1; j <= jmax; ++j) gain += kernel.split(j, k, x, b) * x[j - 1];
      double loss = 0.0;
      for (std::size_t j = 1; j < k; ++j) loss += kernel.split(k, j, x, b);
      v[k - 1] += 2.0 * gain - loss * x[k - 1];
    }
  }
  if (mass_loss_rate) *mass_loss_rate = lost;
}

inline DriftSpec smoluchowski_drift(KernelSpec kernel) {
  DriftSpec spec;
  spec.family = DriftFamily::smoluchowski;
  spec.f = [kernel = std::move(kernel)](const std::vector<double>& x, const Control& b,
                                        std::vector<double>& v) {
    drift_smoluchowski(x, kernel, b, v);
  };
  return spec;
}

/// Preferential-attachment drift: injection into size 1 plus size-weighted
/// promotion k -> k+1.
inline void drift_attachment(const std::vector<double>& x, const AttachSpec& attach,
                             const Control& b, std::vector<double>& v) {
  attach.validate();
  std::size_t jmax = x.size();
  v.assign(jmax, 0.0);
  double lam = attach.lambda(x, b);
  v[0] += attach.alpha * lam;
  for (std::size_t k = 1; k < jmax; ++k) {
    double flow = (1.0 - attach.alpha) * lam * static_cast<double>(k) * x[k - 1];
    v[k - 1] -= flow;
    v[k] += flow;
  }
}

inline DriftSpec attachment_drift(AttachSpec attach) {
  DriftSpec spec;
  spec.family = DriftFamily::attachment;
  spec.f = [attach = std::move(attach)](const std::vector<double>& x, const Control& b,
                                        std::vector<double>& v) {
    drift_attachment(x, attach, b, v);
  };
  return spec;
}

/// Sum of component drifts over a shared index space.
inline DriftSpec composite_drift(std::vector<DriftSpec> parts) {
  DriftSpec spec;
  spec.family = DriftFamily::composite;
  for (const auto& p : parts) spec.simplex = spec.simplex || p.simplex;
  spec.f = [parts = std::move(parts)](const std::vector<double>& x, const Control& b,
                                      std::vector<double>& v) {
    v.assign(x.size(), 0.0);
    std::vector<double> tmp;
    for (const auto& p : parts) {
      p.f(x, b, tmp);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += tmp[i];
    }
  };
  return spec;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------
enum class StepMethod { rk4_fixed, rk45_adaptive };

struct StepSpec {
  StepMethod method = StepMethod::rk45_adaptive;
  double h_ode = 1e-2;   // fixed-step size (rk4)
  double rtol = 1e-8;
  double atol = 1e-10;
  double h_min = 1e-12;
  double h_max = 0.5;
};

namespace detail {

/// Memoizes b*(x) on the exact bit pattern of x; the argmax dominates the
/// drift cost otherwise.
class ControlCache {
 public:
  explicit ControlCache(const PrincipalModel& principal) : principal_(principal) {}

  Control at(double t, const std::vector<double>& x) {
    if (principal_.mode != PrincipalMode::best_response)
      return resolve_control(principal_, t, x);
    std::string key(reinterpret_cast<const char*>(x.data()), x.size() * sizeof(double));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    Control b = best_response(x, principal_);
    if (cache_.size() > 4096) cache_.clear();
    cache_.emplace(std::move(key), b);
    return b;
  }

 private:
  const PrincipalModel& principal_;
  std::unordered_map<std::string, Control> cache_;
};

}  // namespace detail

/// Integrates xdot = f(x, b(x)) with positivity and simplex safeguards.
/// Coordinates dipping below -tol::pos reject the step; at the minimum step
/// this is a hard error. Simplex families are renormalized after each
/// accepted step.
inline Trajectory integrate(const DriftSpec& drift, const std::vector<double>& x0,
                            const PrincipalModel& principal, double t_end,
                            const StepSpec& step = {}) {
  if (t_end <= 0.0) throw std::invalid_argument("integrate: t_end must be positive");
  detail::ControlCache controls(principal);
  Trajectory traj;
  std::vector<double> x = x0;
  double t = 0.0;

  auto rhs = [&](double tt, const std::vector<double>& xx, std::vector<double>& v) {
    Control b = controls.at(tt, xx);
    drift.f(xx, b, v);
  };

  auto record = [&](double tt, const std::vector<double>& xx) {
    traj.times.push_back(tt);
    traj.states.push_back(xx);
    traj.controls.push_back(controls.at(tt, xx));
  };

  auto safeguard = [&](std::vector<double>& xx) -> bool {
    for (double& c : xx) {
      if (c < -tol::pos) return false;
      if (c < 0.0) c = 0.0;
    }
    if (drift.simplex) {
      double s = 0.0;
      for (double c : xx) s += c;
      if (s > 0.0)
        for (double& c : xx) c /= s;
    }
    return true;
  };

  record(0.0, x);

  std::size_t n = x.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), xt(n), xe(n);

  if (step.method == StepMethod::rk4_fixed) {
    double h = step.h_ode;
    while (t < t_end - 1e-15) {
      double hh = std::min(h, t_end - t);
      rhs(t, x, k1);
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * hh * k1[i];
      rhs(t + 0.5 * hh, xt, k2);
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + 0.5 * hh * k2[i];
      rhs(t + 0.5 * hh, xt, k3);
      for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + hh * k3[i];
      rhs(t + hh, xt, k4);
      for (std::size_t i = 0; i < n; ++i)
        xt[i] = x[i] + hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!safeguard(xt))
        throw std::runtime_error("integrate(rk4): positivity violated; reduce h_ode");
      x = xt;
      t += hh;
      record(t, x);
    }
    return traj;
  }

  // Dormand-Prince 5(4)
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  double h = std::min(step.h_max, t_end);
  while (t < t_end - 1e-15) {
    double hh = std::min(h, t_end - t);
    rhs(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + hh * a21 * k1[i];
    rhs(t + c2 * hh, xt, k2);
    for (std::size_t i = 0; i < n; ++i) xt[i] = x[i] + hh * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * hh, xt, k3);
    for (std::size_t i = 0; i < n; ++i)
      xt[i] = x[i] + hh * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * hh, xt, k4);
    for (std::size_t i = 0; i < n; ++i)
      xt[i] = x[i] + hh * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * hh, xt, k5);
    for (std::size_t i = 0; i < n; ++i)
      xt[i] = x[i] + hh * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + hh, xt, k6);
    for (std::size_t i = 0; i < n; ++i)
      xt[i] = x[i] + hh * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + hh, xt, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double e = hh * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                       e7 * k7[i]);
      double sc = step.atol + step.rtol * std::max(std::abs(x[i]), std::abs(xt[i]));
      err = std::max(err, std::abs(e) / sc);
    }

    bool positive_ok = true;
    for (double c : xt)
      if (c < -tol::pos) positive_ok = false;

    if (err <= 1.0 && positive_ok) {
      std::vector<double> accepted = xt;
      safeguard(accepted);
      x = std::move(accepted);
      t += hh;
      record(t, x);
      double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h = std::min(step.h_max, hh * std::min(5.0, std::max(0.2, factor)));
    } else {
      if (!positive_ok)
        h = 0.5 * hh;
      else {
        double factor = 0.9 * std::pow(err, -0.2);
        h = hh * std::min(0.5, std::max(0.1, factor));
      }
      if (h < step.h_min)
        throw std::runtime_error(positive_ok
                                     ? "integrate(rk45): step size underflow"
                                     : "integrate(rk45): positivity violated at minimum step");
    }
  }
  return traj;
}

/// Endpoint convenience wrapper.
inline std::vector<double> integrate_to(const DriftSpec& drift, const std::vector<double>& x0,
                                        const PrincipalModel& principal, double t_end,
                                        const StepSpec& step = {}) {
  return integrate(drift, x0, principal, t_end, step).states.back();
}

// ---------------------------------------------------------------------------
// Lyapunov / moment checks
// ---------------------------------------------------------------------------
struct LyapunovWeight {
  std::vector<double> values;  // L(j) > 0 per index
  double a = 0.0;              // growth constants for the subcritical bound
  double b = 0.0;

  static LyapunovWeight ones(std::size_t n) {
    return {std::vector<double>(n, 1.0), 0.0, 0.0};
  }
  static LyapunovWeight sizes(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = static_cast<double>(j + 1);
    return {std::move(v), 0.0, 0.0};
  }

  double pair(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size() && j < values.size(); ++j) s += values[j] * x[j];
    return s;
  }
};

enum class LyapunovMode { non_increase, subcritical, exact };

struct LyapunovReport {
  bool ok = true;
  double first_violation_time = -1.0;
  double max_violation = 0.0;
};

/// Checks the moment (L, x(t)) along a trajectory: monotone non-increase,
/// the a-priori bound (L,x(t)) <= e^{at}(|x0|_L + bt), or the exact identity
/// (L,x(t)) = e^{at}[(L,x0) + (b/a)(1 - e^{-at})].
inline LyapunovReport lyapunov_check(const Trajectory& traj, const LyapunovWeight& L,
                                     LyapunovMode mode, double rtol = 1e-6) {
  LyapunovReport rep;
  double m0 = L.pair(traj.states.front());
  double prev = m0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    double t = traj.times[i];
    double m = L.pair(traj.states[i]);
    double viol = 0.0;
    switch (mode) {
      case LyapunovMode::non_increase:
        viol = m - prev - rtol * (1.0 + std::abs(prev));
        break;
      case LyapunovMode::subcritical:
        viol = m - std::exp(L.a * t) * (m0 + L.b * t) - rtol * (1.0 + std::abs(m0));
        break;
      case LyapunovMode::exact: {
        double expect = L.a != 0.0
                            ? std::exp(L.a * t) * (m0 + L.b / L.a * (1.0 - std::exp(-L.a * t)))
                            : m0 + L.b * t;
        viol = std::abs(m - expect) - rtol * (1.0 + std::abs(expect));
        break;
      }
    }
    if (viol > 0.0) {
      if (rep.ok) rep.first_violation_time = t;
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, viol);
    }
    prev = m;
  }
  return rep;
}

}  // namespace kinevo

#endif  // KINEVO_KINETIC_HPP
