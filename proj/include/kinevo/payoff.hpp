#ifndef KINEVO_PAYOFF_HPP
#define KINEVO_PAYOFF_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <utility>

#include "kinevo/common.hpp"

namespace kinevo {

enum class PayoffKind { inspection, corruption, cyber, terror, tabular };
enum class Orientation { maximize, minimize };

/// p_j(x, b): probability of detection / infection / attack success.
using DetectionCurve =
    std::function<double(std::size_t j, const std::vector<double>& x, const Control& b)>;

inline double control_coord(const Control& b, std::size_t j) {
  if (b.empty()) throw std::invalid_argument("empty control vector");
  return b[std::min(j, b.size() - 1)];
}

/// p_j(x,b) = clamp(b_j / (1 + theta * xbar), 0, 1) with xbar the mean
/// resistance level sum_i r_i x_i. Monotone increasing in b.
inline DetectionCurve linear_detection(double theta, std::vector<double> r_levels) {
  return [theta, r = std::move(r_levels)](std::size_t j, const std::vector<double>& x,
                                          const Control& b) {
    double xbar = 0.0;
    for (std::size_t i = 0; i < x.size() && i < r.size(); ++i) xbar += r[i] * x[i];
    double p = control_coord(b, j) / (1.0 + theta * xbar);
    return std::clamp(p, 0.0, 1.0);
  };
}

/// p_j(x,b) = sigma(a*b - c*r_j - d*xbar), logistic in the control effort.
inline DetectionCurve logistic_detection(double a, double c, double d,
                                         std::vector<double> r_levels) {
  return [a, c, d, r = std::move(r_levels)](std::size_t j, const std::vector<double>& x,
                                            const Control& b) {
    double xbar = 0.0;
    for (std::size_t i = 0; i < x.size() && i < r.size(); ++i) xbar += r[i] * x[i];
    double rj = j < r.size() ? r[j] : 0.0;
    double z = a * control_coord(b, j) - c * rj - d * xbar;
    return 1.0 / (1.0 + std::exp(-z));
  };
}

inline DetectionCurve constant_detection(double p) {
  return [p](std::size_t, const std::vector<double>&, const Control&) { return p; };
}

namespace detail {
inline void check_probability(double p, std::size_t j, const Control& b) {
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream os;
    os << "detection probability " << p << " outside [0,1] for strategy " << j << " at b = (";
    for (std::size_t i = 0; i < b.size(); ++i) os << (i ? "," : "") << b[i];
    os << ")";
    throw std::domain_error(os.str());
  }
}
}  // namespace detail

/// One entry of the payoff catalog: the per-strategy payoff R_j(x, b) of a
/// small player, together with its optimization orientation. The engine-facing
/// reward() is the raw payoff for maximizers and its negation for minimizers,
/// so imitation dynamics always climb the reward.
class PayoffModel {
 public:
  using RawFn =
      std::function<double(std::size_t j, const std::vector<double>& x, const Control& b)>;

  PayoffModel() = default;
  PayoffModel(PayoffKind kind, std::size_t d, Orientation orient, RawFn raw)
      : kind_(kind), d_(d), orientation_(orient), raw_(std::move(raw)) {}

  PayoffKind kind() const { return kind_; }
  Orientation orientation() const { return orientation_; }
  std::size_t num_strategies() const { return d_; }

  double raw(std::size_t j, const std::vector<double>& x, const Control& b) const {
    if (j >= d_) throw std::invalid_argument("strategy index out of range");
    return raw_(j, x, b);
  }

  double reward(std::size_t j, const std::vector<double>& x, const Control& b) const {
    double v = raw(j, x, b);
    return orientation_ == Orientation::maximize ? v : -v;
  }

  std::vector<double> rewards(const std::vector<double>& x, const Control& b) const {
    std::vector<double> r(d_);
    for (std::size_t j = 0; j < d_; ++j) r[j] = reward(j, x, b);
    return r;
  }

 private:
  PayoffKind kind_ = PayoffKind::tabular;
  std::size_t d_ = 0;
  Orientation orientation_ = Orientation::maximize;
  RawFn raw_;
};

/// R_j = r + (1 - p_j) r_j - p_j f(r_j): inspectee with undeclared profit r_j.
inline double inspection_payoff(std::size_t j, const std::vector<double>& x, const Control& b,
                                const DetectionCurve& p, double r,
                                const std::vector<double>& r_list,
                                const std::function<double(double)>& fine) {
  double pj = p(j, x, b);
  detail::check_probability(pj, j, b);
  return r + (1.0 - pj) * r_list[j] - pj * fine(r_list[j]);
}

/// R_j = (1 - p_j)(r_j + w) + p_j (w0 - f(r_j)): corrupt inspector taking bribe r_j.
inline double corruption_payoff(std::size_t j, const std::vector<double>& x, const Control& b,
                                const DetectionCurve& p, double w, double w0,
                                const std::vector<double>& r_list,
                                const std::function<double(double)>& fine) {
  double pj = p(j, x, b);
  detail::check_probability(pj, j, b);
  return (1.0 - pj) * (r_list[j] + w) + pj * (w0 - fine(r_list[j]));
}

/// R_j = p_j c + r_j: cost of defense level r_j under infection risk (minimize).
inline double cyber_payoff(std::size_t j, const std::vector<double>& x, const Control& b,
                           const DetectionCurve& p, double c,
                           const std::vector<double>& r_list) {
  double pj = p(j, x, b);
  detail::check_probability(pj, j, b);
  return pj * c + r_list[j];
}

/// R_j = (1 - p_j) r_fail_j(b) + p_j (S_j + r_succ_j(b)): attack at level j,
/// p_j the success probability.
inline double terror_payoff(std::size_t j, const std::vector<double>& x, const Control& b,
                            const DetectionCurve& p, const std::vector<double>& s_list,
                            const std::function<double(std::size_t, const Control&)>& r_fail,
                            const std::function<double(std::size_t, const Control&)>& r_succ) {
  double pj = p(j, x, b);
  detail::check_probability(pj, j, b);
  return (1.0 - pj) * r_fail(j, b) + pj * (s_list[j] + r_succ(j, b));
}

/// Principal's counterterror cost B = sum_j x_j [(1 - p_j) b + p_j (b + S_j)], scalar b.
inline double terror_principal_cost(const std::vector<double>& x, const Control& b,
                                    const DetectionCurve& p,
                                    const std::vector<double>& s_list) {
  double cost = 0.0;
  double bs = control_coord(b, 0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    double pj = p(j, x, b);
    detail::check_probability(pj, j, b);
    cost += x[j] * ((1.0 - pj) * bs + pj * (bs + s_list[j]));
  }
  return cost;
}

inline PayoffModel make_inspection(std::size_t d, DetectionCurve p, double r,
                                   std::vector<double> r_list,
                                   std::function<double(double)> fine) {
  return PayoffModel(
      PayoffKind::inspection, d, Orientation::maximize,
      [p = std::move(p), r, rl = std::move(r_list), f = std::move(fine)](
          std::size_t j, const std::vector<double>& x, const Control& b) {
        return inspection_payoff(j, x, b, p, r, rl, f);
      });
}

inline PayoffModel make_corruption(std::size_t d, DetectionCurve p, double w, double w0,
                                   std::vector<double> r_list,
                                   std::function<double(double)> fine) {
  return PayoffModel(
      PayoffKind::corruption, d, Orientation::maximize,
      [p = std::move(p), w, w0, rl = std::move(r_list), f = std::move(fine)](
          std::size_t j, const std::vector<double>& x, const Control& b) {
        return corruption_payoff(j, x, b, p, w, w0, rl, f);
      });
}

inline PayoffModel make_cyber(std::size_t d, DetectionCurve p, double c,
                              std::vector<double> r_list) {
  return PayoffModel(PayoffKind::cyber, d, Orientation::minimize,
                     [p = std::move(p), c, rl = std::move(r_list)](
                         std::size_t j, const std::vector<double>& x, const Control& b) {
                       return cyber_payoff(j, x, b, p, c, rl);
                     });
}

inline PayoffModel make_terror(std::size_t d, DetectionCurve p, std::vector<double> s_list,
                               std::function<double(std::size_t, const Control&)> r_fail,
                               std::function<double(std::size_t, const Control&)> r_succ) {
  return PayoffModel(
      PayoffKind::terror, d, Orientation::maximize,
      [p = std::move(p), sl = std::move(s_list), rf = std::move(r_fail),
       rs = std::move(r_succ)](std::size_t j, const std::vector<double>& x, const Control& b) {
        return terror_payoff(j, x, b, p, sl, rf, rs);
      });
}

/// Tabular payoff: d x (b-grid) value table with multilinear interpolation in
/// the scalar control and optional linear dependence on the moments of x.
/// R_j(x, b) = interp(table[j], b) + sum_i moment_coeffs[j][i] * x_i.
struct TabularPayoffSpec {
  std::vector<double> b_grid;                       // increasing scalar grid; may be size 1
  std::vector<std::vector<double>> values;          // values[j][k] at b_grid[k]
  std::vector<std::vector<double>> moment_coeffs;   // optional, values[j].size() == d
  Orientation orientation = Orientation::maximize;
};

inline PayoffModel make_tabular(const TabularPayoffSpec& spec) {
  std::size_t d = spec.values.size();
  if (d == 0) throw std::invalid_argument("tabular payoff: empty value table");
  for (const auto& row : spec.values)
    if (row.size() != spec.b_grid.size())
      throw std::invalid_argument("tabular payoff: row size does not match b grid");
  if (!spec.moment_coeffs.empty() && spec.moment_coeffs.size() != d)
    throw std::invalid_argument("tabular payoff: moment coefficient rows != d");
  return PayoffModel(
      PayoffKind::tabular, d, spec.orientation,
      [spec](std::size_t j, const std::vector<double>& x, const Control& b) {
        double base;
        const auto& g = spec.b_grid;
        const auto& row = spec.values[j];
        if (g.size() == 1) {
          base = row[0];
        } else {
          double bs = control_coord(b, 0);
          bs = std::clamp(bs, g.front(), g.back());
          auto it = std::upper_bound(g.begin(), g.end(), bs);
          std::size_t hi = std::min<std::size_t>(g.size() - 1,
                                                 static_cast<std::size_t>(it - g.begin()));
          std::size_t lo = hi == 0 ? 0 : hi - 1;
          double t = g[hi] == g[lo] ? 0.0 : (bs - g[lo]) / (g[hi] - g[lo]);
          base = (1.0 - t) * row[lo] + t * row[hi];
        }
        if (!spec.moment_coeffs.empty()) {
          const auto& mc = spec.moment_coeffs[j];
          for (std::size_t i = 0; i < x.size() && i < mc.size(); ++i) base += mc[i] * x[i];
        }
        return base;
      });
}

/// b-independent payoff linear in x: R_j(x) = c_j + sum_i A[j][i] x_i.
/// Convenient for hand-built test instances.
inline PayoffModel make_linear_tabular(std::vector<double> c,
                                       std::vector<std::vector<double>> A,
                                       Orientation orient = Orientation::maximize) {
  std::size_t d = c.size();
  if (A.size() != d) throw std::invalid_argument("linear tabular payoff: matrix rows != d");
  return PayoffModel(PayoffKind::tabular, d, orient,
                     [c = std::move(c), A = std::move(A)](
                         std::size_t j, const std::vector<double>& x, const Control&) {
                       double v = c[j];
                       for (std::size_t i = 0; i < x.size() && i < A[j].size(); ++i)
                         v += A[j][i] * x[i];
                       return v;
                     });
}

}  // namespace kinevo

#endif  // KINEVO_PAYOFF_HPP
