#ifndef KINEVO_BEST_RESPONSE_HPP
#define KINEVO_BEST_RESPONSE_HPP

#include <cmath>
#include <functional>
#include <utility>

#include "kinevo/common.hpp"

namespace kinevo {

enum class PrincipalMode { fixed, best_response, policy };

/// The major player's decision data: reward B(x, b), the compact control box,
/// and the operating mode used during simulation / integration.
struct PrincipalModel {
  std::function<double(const std::vector<double>& x, const Control& b)> reward;
  std::vector<std::pair<double, double>> control_box;  // per-coordinate [lo, hi]
  PrincipalMode mode = PrincipalMode::fixed;
  Control fixed_b;

  // policy mode: piecewise-constant on the tau grid, refreshed from the state
  // at each cell boundary.
  std::function<Control(double t, const std::vector<double>& x)> policy;
  double policy_tau = 1.0;

  std::size_t control_dim() const { return control_box.size(); }

  Control clamp(Control b) const {
    for (std::size_t i = 0; i < b.size() && i < control_box.size(); ++i)
      b[i] = std::clamp(b[i], control_box[i].first, control_box[i].second);
    return b;
  }

  Control box_center() const {
    Control b(control_box.size());
    for (std::size_t i = 0; i < b.size(); ++i)
      b[i] = 0.5 * (control_box[i].first + control_box[i].second);
    return b;
  }
};

namespace detail {

/// Golden-section maximum of a unimodal scalar function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                        double tol_b) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol_b) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  double m = 0.5 * (a + b);
  double fm = f(m);
  // keep boundary maximizers exact for monotone rewards
  if (f(lo) >= fm && f(lo) >= f(hi)) return lo;
  if (f(hi) >= fm) return hi;
  return m;
}

inline bool concave_probe(const std::function<double(double)>& f, double lo, double hi) {
  // 3-point midpoint test on each axis: f(mid) >= (f(lo)+f(hi))/2 - slack
  double mid = 0.5 * (lo + hi);
  double slack = 1e-12 * (1.0 + std::abs(f(mid)));
  return f(mid) >= 0.5 * (f(lo) + f(hi)) - slack;
}

}  // namespace detail

/// b*(x) = argmax_b B(x, b) over the control box. Concavity in b is probed
/// per axis; on failure the axis falls back to a grid search with local
/// golden-section refinement.
inline Control best_response(const std::vector<double>& x, const PrincipalModel& principal,
                             double tol_b = 1e-10, std::size_t fallback_grid = 33) {
  if (!principal.reward) throw std::invalid_argument("best_response: principal reward not set");
  std::size_t r = principal.control_box.size();
  Control b = principal.box_center();
  if (r == 0) return b;

  // cyclic coordinate sweeps
  for (int sweep = 0; sweep < 8; ++sweep) {
    Control prev = b;
    for (std::size_t axis = 0; axis < r; ++axis) {
      auto [lo, hi] = principal.control_box[axis];
      auto line = [&](double v) {
        Control bb = b;
        bb[axis] = v;
        return principal.reward(x, bb);
      };
      if (hi - lo <= tol_b) {
        b[axis] = lo;
        continue;
      }
      if (detail::concave_probe(line, lo, hi)) {
        b[axis] = detail::golden_max(line, lo, hi, tol_b);
      } else {
        // non-concave axis: coarse grid, then refine around the best cell
        double best_v = lo, best_f = line(lo);
        for (std::size_t k = 1; k < fallback_grid; ++k) {
          double v = lo + (hi - lo) * static_cast<double>(k) /
                              static_cast<double>(fallback_grid - 1);
          double fv = line(v);
          if (fv > best_f) {
            best_f = fv;
            best_v = v;
          }
        }
        double h = (hi - lo) / static_cast<double>(fallback_grid - 1);
        b[axis] = detail::golden_max(line, std::max(lo, best_v - h), std::min(hi, best_v + h),
                                     tol_b);
      }
    }
    if (sup_dist(prev, b) <= tol_b && sweep > 0) break;
  }
  return b;
}

/// Resolves the control the principal applies at (t, x) under her mode.
inline Control resolve_control(const PrincipalModel& principal, double t,
                               const std::vector<double>& x) {
  switch (principal.mode) {
    case PrincipalMode::fixed:
      return principal.fixed_b;
    case PrincipalMode::best_response:
      return best_response(x, principal);
    case PrincipalMode::policy: {
      if (!principal.policy) throw std::invalid_argument("principal policy not set");
      return principal.clamp(principal.policy(t, x));
    }
  }
  throw std::logic_error("unreachable");
}

inline PrincipalModel fixed_principal(Control b) {
  PrincipalModel p;
  p.mode = PrincipalMode::fixed;
  p.fixed_b = std::move(b);
  p.reward = [](const std::vector<double>&, const Control&) { return 0.0; };
  for (double v : p.fixed_b) p.control_box.emplace_back(v, v);
  return p;
}

}  // namespace kinevo

#endif  // KINEVO_BEST_RESPONSE_HPP
