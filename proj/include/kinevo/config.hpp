#ifndef KINEVO_CONFIG_HPP
#define KINEVO_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinevo/kinevo.hpp"

namespace kinevo::config {

using nlohmann::json;

/// Raised on malformed configuration; the CLI maps it to its own exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void check_keys(const json& j, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

template <typename T>
T get(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key \"" + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const std::string& where, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace detail

enum class ModelFamily { pairwise, kth_order, multiclass, coalition, attachment, growth };

inline ModelFamily parse_family(const std::string& s) {
  if (s == "pairwise") return ModelFamily::pairwise;
  if (s == "kth_order") return ModelFamily::kth_order;
  if (s == "multiclass") return ModelFamily::multiclass;
  if (s == "coalition") return ModelFamily::coalition;
  if (s == "attachment") return ModelFamily::attachment;
  if (s == "growth") return ModelFamily::growth;
  throw ConfigError("model.family: unknown family \"" + s + "\"");
}

inline DetectionCurve parse_detection(const json& j, const std::string& where) {
  detail::check_keys(j, where, {"kind", "theta", "a", "c", "d", "p", "r_levels"});
  std::string kind = detail::get<std::string>(j, where, "kind");
  if (kind == "linear")
    return linear_detection(detail::get<double>(j, where, "theta"),
                            detail::get<std::vector<double>>(j, where, "r_levels"));
  if (kind == "logistic")
    return logistic_detection(detail::get<double>(j, where, "a"),
                              detail::get<double>(j, where, "c"),
                              detail::get<double>(j, where, "d"),
                              detail::get<std::vector<double>>(j, where, "r_levels"));
  if (kind == "constant") return constant_detection(detail::get<double>(j, where, "p"));
  throw ConfigError(where + ".kind: unknown detection curve \"" + kind + "\"");
}

inline std::function<double(double)> parse_fine(const json& j, const std::string& where) {
  detail::check_keys(j, where, {"kind", "coeff"});
  std::string kind = detail::get<std::string>(j, where, "kind");
  double c = detail::get<double>(j, where, "coeff");
  if (kind == "linear") return [c](double r) { return c * r; };
  if (kind == "quadratic") return [c](double r) { return c * r * r; };
  throw ConfigError(where + ".kind: unknown fine \"" + kind + "\"");
}

inline PayoffModel parse_payoff(const json& j, const std::string& where) {
  detail::check_keys(j, where,
                     {"kind", "detection", "r", "w", "w0", "c", "r_levels", "fine", "S",
                      "r_fail", "r_succ", "fail_b_slope", "succ_b_slope", "const",
                      "matrix", "orientation"});
  std::string kind = detail::get<std::string>(j, where, "kind");
  if (kind == "linear") {
    auto c = detail::get<std::vector<double>>(j, where, "const");
    auto A = detail::get<std::vector<std::vector<double>>>(j, where, "matrix");
    std::string orient = detail::get_or<std::string>(j, where, "orientation", "maximize");
    if (orient != "maximize" && orient != "minimize")
      throw ConfigError(where + ".orientation: expected maximize or minimize");
    return make_linear_tabular(std::move(c), std::move(A),
                               orient == "maximize" ? Orientation::maximize
                                                   : Orientation::minimize);
  }
  if (!j.contains("detection")) throw ConfigError(where + ": missing key \"detection\"");
  DetectionCurve p = parse_detection(j.at("detection"), where + ".detection");
  auto r_levels = detail::get<std::vector<double>>(j, where, "r_levels");
  std::size_t d = r_levels.size();
  if (d == 0) throw ConfigError(where + ".r_levels: must be non-empty");
  if (kind == "inspection")
    return make_inspection(d, std::move(p), detail::get<double>(j, where, "r"),
                           std::move(r_levels), parse_fine(j.at("fine"), where + ".fine"));
  if (kind == "corruption")
    return make_corruption(d, std::move(p), detail::get<double>(j, where, "w"),
                           detail::get<double>(j, where, "w0"), std::move(r_levels),
                           parse_fine(j.at("fine"), where + ".fine"));
  if (kind == "cyber")
    return make_cyber(d, std::move(p), detail::get<double>(j, where, "c"),
                      std::move(r_levels));
  if (kind == "terror") {
    auto S = detail::get<std::vector<double>>(j, where, "S");
    auto rf = detail::get<std::vector<double>>(j, where, "r_fail");
    auto rs = detail::get<std::vector<double>>(j, where, "r_succ");
    double fs = detail::get_or<double>(j, where, "fail_b_slope", 0.0);
    double ss = detail::get_or<double>(j, where, "succ_b_slope", 0.0);
    if (S.size() != d || rf.size() != d || rs.size() != d)
      throw ConfigError(where + ": S / r_fail / r_succ must match r_levels length");
    return make_terror(
        d, std::move(p), std::move(S),
        [rf, fs](std::size_t jj, const Control& b) {
          return rf[jj] - fs * control_coord(b, jj);
        },
        [rs, ss](std::size_t jj, const Control& b) {
          return rs[jj] - ss * control_coord(b, jj);
        });
  }
  throw ConfigError(where + ".kind: unknown payoff \"" + kind + "\"");
}

inline PrincipalModel parse_principal(const json& j, std::size_t d) {
  const std::string where = "principal";
  PrincipalModel p;
  if (j.is_null()) {
    p.reward = [](const std::vector<double>&, const Control&) { return 0.0; };
    p.mode = PrincipalMode::fixed;
    return p;
  }
  detail::check_keys(j, where, {"mode", "b", "control_box", "reward"});
  std::string mode = detail::get_or<std::string>(j, where, "mode", "fixed");
  if (mode == "fixed")
    p.mode = PrincipalMode::fixed;
  else if (mode == "best_response")
    p.mode = PrincipalMode::best_response;
  else
    throw ConfigError(where + ".mode: expected fixed or best_response");
  if (j.contains("control_box")) {
    auto box = detail::get<std::vector<std::vector<double>>>(j, where, "control_box");
    for (const auto& ax : box) {
      if (ax.size() != 2 || !(ax[0] <= ax[1]))
        throw ConfigError(where + ".control_box: each axis is [lo, hi] with lo <= hi");
      p.control_box.emplace_back(ax[0], ax[1]);
    }
  }
  if (j.contains("b")) {
    p.fixed_b = detail::get<std::vector<double>>(j, where, "b");
    if (p.control_box.empty())
      for (double v : p.fixed_b) p.control_box.emplace_back(v, v);
  } else if (p.mode == PrincipalMode::fixed && !p.control_box.empty()) {
    p.fixed_b = p.box_center();
  }
  if (p.mode == PrincipalMode::best_response && p.control_box.empty())
    throw ConfigError(where + ": best_response mode needs a control_box");

  const json reward = j.value("reward", json());
  if (reward.is_null()) {
    p.reward = [](const std::vector<double>&, const Control&) { return 0.0; };
    return p;
  }
  const std::string rwhere = where + ".reward";
  detail::check_keys(reward, rwhere,
                     {"kind", "q", "target", "state_coeffs", "S", "detection"});
  std::string kind = detail::get<std::string>(reward, rwhere, "kind");
  if (kind == "zero") {
    p.reward = [](const std::vector<double>&, const Control&) { return 0.0; };
  } else if (kind == "quadratic") {
    // B(x, b) = sum_j c_j x_j - sum_k q_k (b_k - target_k)^2, concave in b
    auto q = detail::get<std::vector<double>>(reward, rwhere, "q");
    auto target = detail::get<std::vector<double>>(reward, rwhere, "target");
    auto sc = detail::get_or<std::vector<double>>(reward, rwhere, "state_coeffs", {});
    if (q.size() != target.size())
      throw ConfigError(rwhere + ": q and target must have equal length");
    p.reward = [q, target, sc](const std::vector<double>& x, const Control& b) {
      double v = 0.0;
      for (std::size_t i = 0; i < x.size() && i < sc.size(); ++i) v += sc[i] * x[i];
      for (std::size_t k = 0; k < q.size() && k < b.size(); ++k)
        v -= q[k] * (b[k] - target[k]) * (b[k] - target[k]);
      return v;
    };
  } else if (kind == "terror_cost") {
    auto S = detail::get<std::vector<double>>(reward, rwhere, "S");
    if (S.size() != d) throw ConfigError(rwhere + ".S: length must equal d");
    if (!reward.contains("detection"))
      throw ConfigError(rwhere + ": missing key \"detection\"");
    DetectionCurve det = parse_detection(reward.at("detection"), rwhere + ".detection");
    // principal minimizes the cost; the engine maximizes, so negate
    p.reward = [det, S](const std::vector<double>& x, const Control& b) {
      return -terror_principal_cost(x, b, det, S);
    };
  } else {
    throw ConfigError(rwhere + ".kind: unknown reward \"" + kind + "\"");
  }
  return p;
}

inline ClassStructure parse_classes(const json& j) {
  const std::string where = "model.classes";
  detail::check_keys(j, where, {"num_classes", "comm_mode", "fractions", "kappas"});
  ClassStructure cs;
  cs.num_classes = detail::get<std::size_t>(j, where, "num_classes");
  std::string mode = detail::get<std::string>(j, where, "comm_mode");
  if (mode == "C1")
    cs.comm_mode = CommMode::C1_no_communication;
  else if (mode == "C2")
    cs.comm_mode = CommMode::C2_full_communication;
  else
    throw ConfigError(where + ".comm_mode: expected C1 or C2");
  cs.class_fractions = detail::get<std::vector<double>>(j, where, "fractions");
  cs.per_class_kappa = detail::get<std::vector<double>>(j, where, "kappas");
  try {
    cs.validate();
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return cs;
}

inline KernelSpec parse_kernel(const json& j) {
  const std::string where = "model.kernel";
  detail::check_keys(j, where,
                     {"kind", "c", "f", "merge_a", "split_a", "size_payoff"});
  std::string kind = detail::get<std::string>(j, where, "kind");
  if (kind == "constant")
    return constant_kernel(detail::get<double>(j, where, "c"),
                           detail::get_or<double>(j, where, "f", 0.0));
  if (kind == "strategic") {
    double ma = detail::get<double>(j, where, "merge_a");
    double sa = detail::get_or<double>(j, where, "split_a", 0.0);
    const json sp = j.value("size_payoff", json());
    const std::string swhere = where + ".size_payoff";
    detail::check_keys(sp, swhere, {"kind", "scale", "cap"});
    std::string sk = detail::get<std::string>(sp, swhere, "kind");
    double scale = detail::get<double>(sp, swhere, "scale");
    SizePayoff R;
    if (sk == "log") {
      // per-member benefit of pooling, saturating in size
      R = [scale](std::size_t size, const std::vector<double>&, const Control&) {
        return scale * std::log(static_cast<double>(size));
      };
    } else if (sk == "capped_linear") {
      double cap = detail::get<double>(sp, swhere, "cap");
      R = [scale, cap](std::size_t size, const std::vector<double>&, const Control&) {
        return scale * std::min(static_cast<double>(size), cap);
      };
    } else {
      throw ConfigError(swhere + ".kind: unknown size payoff \"" + sk + "\"");
    }
    return strategic_kernel(constant_weights(ma), constant_weights(sa), std::move(R));
  }
  throw ConfigError(where + ".kind: unknown kernel \"" + kind + "\"");
}

inline GrowthCoeffs parse_growth_channels(const json& arr) {
  const std::string where = "model.channels";
  if (!arr.is_array() || arr.empty())
    throw ConfigError(where + ": expected a non-empty array");
  GrowthCoeffs g;
  std::size_t n = 0;
  for (const json& ch : arr) {
    std::string cw = where + "[" + std::to_string(n++) + "]";
    detail::check_keys(ch, cw,
                       {"type", "i", "j", "i1", "i2", "j1", "j2", "rate_const",
                        "mass_action"});
    std::string type = detail::get<std::string>(ch, cw, "type");
    double c = detail::get<double>(ch, cw, "rate_const");
    if (c < 0.0) throw ConfigError(cw + ".rate_const: must be non-negative");
    // default mass action: one factor of x per consumed coalition
    auto ma = detail::get_or<std::vector<std::size_t>>(ch, cw, "mass_action", {});
    auto with_ma = [c](std::vector<std::size_t> factors) -> StateRate {
      return [c, factors = std::move(factors)](const std::vector<double>& x, const Control&) {
        double r = c;
        for (std::size_t idx : factors) {
          if (idx < 1 || idx > x.size()) return 0.0;
          r *= x[idx - 1];
        }
        return r;
      };
    };
    if (type == "birth") {
      std::size_t jj = detail::get<std::size_t>(ch, cw, "j");
      g.birth.emplace_back(jj, with_ma(ma));
    } else if (type == "death") {
      std::size_t jj = detail::get<std::size_t>(ch, cw, "j");
      g.death.emplace_back(jj, with_ma(ma.empty() ? std::vector<std::size_t>{jj} : ma));
    } else if (type == "mutate") {
      std::size_t i = detail::get<std::size_t>(ch, cw, "i");
      std::size_t jj = detail::get<std::size_t>(ch, cw, "j");
      g.mutate.emplace_back(i, jj, with_ma(ma.empty() ? std::vector<std::size_t>{i} : ma));
    } else if (type == "split") {
      std::size_t i = detail::get<std::size_t>(ch, cw, "i");
      std::size_t j1 = detail::get<std::size_t>(ch, cw, "j1");
      std::size_t j2 = detail::get<std::size_t>(ch, cw, "j2");
      g.split1.emplace_back(i, j1, j2,
                            with_ma(ma.empty() ? std::vector<std::size_t>{i} : ma));
    } else if (type == "merge") {
      std::size_t i1 = detail::get<std::size_t>(ch, cw, "i1");
      std::size_t i2 = detail::get<std::size_t>(ch, cw, "i2");
      std::size_t jj = detail::get<std::size_t>(ch, cw, "j");
      g.merge2.emplace_back(i1, i2, jj,
                            with_ma(ma.empty() ? std::vector<std::size_t>{i1, i2} : ma));
    } else if (type == "regroup") {
      std::size_t i1 = detail::get<std::size_t>(ch, cw, "i1");
      std::size_t i2 = detail::get<std::size_t>(ch, cw, "i2");
      std::size_t j1 = detail::get<std::size_t>(ch, cw, "j1");
      std::size_t j2 = detail::get<std::size_t>(ch, cw, "j2");
      g.regroup2.emplace_back(i1, i2, j1, j2,
                              with_ma(ma.empty() ? std::vector<std::size_t>{i1, i2} : ma));
    } else {
      throw ConfigError(cw + ".type: unknown channel \"" + type + "\"");
    }
  }
  return g;
}

/// Everything the CLI needs: the chain builder, the matching kinetic drift, the
/// initial-state factory and the numeric/experiment knobs.
struct ParsedModel {
  ModelFamily family = ModelFamily::pairwise;
  std::size_t dim = 0;                  // occupation vector length
  TransitionBuilder builder;
  DriftSpec drift;
  std::optional<PayoffModel> payoff;    // pairwise / kth_order only
  PrincipalModel principal;
  std::function<OccupationState(long long N)> initial;
  long long N = 100;
  StepSpec step;
  double t_end = 1.0;
  std::size_t n_runs = 100;
  std::uint64_t master_seed = 1;
  double kappa = 1.0;

  // planning / lln extras (defaulted when absent)
  std::size_t grid_m = 11;
  std::size_t b_points = 9;
  double tau = 0.1;
  std::optional<double> beta;
  std::size_t horizon_steps = 5;
  std::vector<long long> N_values;
  double bound_order = 0.5;
  std::function<double(const std::vector<double>&)> observable;
  json resolved;
};

inline std::function<double(const std::vector<double>&)> parse_observable(
    const json& j) {
  const std::string where = "experiment.observable";
  if (j.is_null())
    return [](const std::vector<double>& x) { return x.empty() ? 0.0 : x[0]; };
  detail::check_keys(j, where, {"kind", "index", "order"});
  std::string kind = detail::get<std::string>(j, where, "kind");
  if (kind == "coordinate") {
    std::size_t idx = detail::get<std::size_t>(j, where, "index");
    return [idx](const std::vector<double>& x) {
      return idx < x.size() ? x[idx] : 0.0;
    };
  }
  if (kind == "moment") {
    double order = detail::get<double>(j, where, "order");
    return [order](const std::vector<double>& x) {
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        s += std::pow(static_cast<double>(i + 1), order) * x[i];
      return s;
    };
  }
  throw ConfigError(where + ".kind: unknown observable \"" + kind + "\"");
}

inline ParsedModel parse(const json& root) {
  detail::check_keys(root, "config", {"model", "principal", "numerics", "experiment"});
  if (!root.contains("model")) throw ConfigError("config: missing key \"model\"");
  const json& m = root.at("model");
  detail::check_keys(m, "model",
                     {"family", "kappa", "K", "payoff", "payoffs", "classes", "kernel",
                      "attach", "channels", "j_max", "initial", "N"});
  ParsedModel out;
  out.resolved = root;
  out.family = parse_family(detail::get<std::string>(m, "model", "family"));
  out.kappa = detail::get_or<double>(m, "model", "kappa", 1.0);
  out.N = detail::get_or<long long>(m, "model", "N", 100);
  auto initial = detail::get<std::vector<double>>(m, "model", "initial");

  switch (out.family) {
    case ModelFamily::pairwise: {
      if (!m.contains("payoff")) throw ConfigError("model: missing key \"payoff\"");
      PayoffModel payoff = parse_payoff(m.at("payoff"), "model.payoff");
      out.dim = payoff.num_strategies();
      double kappa = out.kappa;
      out.builder = [payoff, kappa](const OccupationState& s, const Control& b) {
        return build_pairwise(s, payoff, b, kappa);
      };
      out.drift = replicator_drift(payoff, kappa);
      out.payoff = std::move(payoff);
      break;
    }
    case ModelFamily::kth_order: {
      if (!m.contains("payoff")) throw ConfigError("model: missing key \"payoff\"");
      PayoffModel payoff = parse_payoff(m.at("payoff"), "model.payoff");
      out.dim = payoff.num_strategies();
      std::size_t K = detail::get<std::size_t>(m, "model", "K");
      double kappa = out.kappa;
      out.builder = [payoff, kappa, K](const OccupationState& s, const Control& b) {
        return build_kth_order(s, payoff, b, kappa, K, spread_group_rate());
      };
      out.drift = kth_order_drift(payoff, kappa, K, spread_group_rate());
      out.payoff = std::move(payoff);
      break;
    }
    case ModelFamily::multiclass: {
      if (!m.contains("classes")) throw ConfigError("model: missing key \"classes\"");
      ClassStructure cs = parse_classes(m.at("classes"));
      if (!m.contains("payoffs") || !m.at("payoffs").is_array())
        throw ConfigError("model.payoffs: expected an array, one payoff per class");
      std::vector<PayoffModel> payoffs;
      std::size_t idx = 0;
      for (const json& pj : m.at("payoffs"))
        payoffs.push_back(
            parse_payoff(pj, "model.payoffs[" + std::to_string(idx++) + "]"));
      if (payoffs.size() != cs.num_classes)
        throw ConfigError("model.payoffs: need exactly one payoff per class");
      out.dim = payoffs[0].num_strategies() * cs.num_classes;
      out.builder = [payoffs, cs](const OccupationState& s, const Control& b) {
        return build_multiclass(s, payoffs, b, cs);
      };
      out.drift = multiclass_drift(payoffs, cs);
      break;
    }
    case ModelFamily::coalition: {
      if (!m.contains("kernel")) throw ConfigError("model: missing key \"kernel\"");
      KernelSpec kernel = parse_kernel(m.at("kernel"));
      out.dim = detail::get<std::size_t>(m, "model", "j_max");
      out.builder = [kernel](const OccupationState& s, const Control& b) {
        return build_coalition(s, kernel, b);
      };
      out.drift = smoluchowski_drift(kernel);
      break;
    }
    case ModelFamily::attachment: {
      if (!m.contains("attach")) throw ConfigError("model: missing key \"attach\"");
      const json& aj = m.at("attach");
      detail::check_keys(aj, "model.attach", {"alpha", "lambda"});
      AttachSpec attach;
      attach.alpha = detail::get<double>(aj, "model.attach", "alpha");
      double lam = detail::get<double>(aj, "model.attach", "lambda");
      if (lam < 0.0) throw ConfigError("model.attach.lambda: must be non-negative");
      attach.lambda = [lam](const std::vector<double>&, const Control&) { return lam; };
      out.dim = detail::get<std::size_t>(m, "model", "j_max");
      out.builder = [attach](const OccupationState& s, const Control& b) {
        return build_attachment(s, attach, b);
      };
      out.drift = attachment_drift(attach);
      break;
    }
    case ModelFamily::growth: {
      if (!m.contains("channels")) throw ConfigError("model: missing key \"channels\"");
      GrowthCoeffs coeffs = parse_growth_channels(m.at("channels"));
      out.dim = detail::get<std::size_t>(m, "model", "j_max");
      out.builder = [coeffs](const OccupationState& s, const Control& b) {
        return build_growth(s, coeffs, b);
      };
      out.drift = growth_drift(coeffs);
      break;
    }
  }

  if (initial.size() > out.dim)
    throw ConfigError("model.initial: longer than the state dimension");
  initial.resize(out.dim, 0.0);

  bool simplex = out.family == ModelFamily::pairwise ||
                 out.family == ModelFamily::kth_order ||
                 out.family == ModelFamily::multiclass;
  if (simplex) {
    SimplexState x0(initial);
    if (!x0.valid())
      throw ConfigError("model.initial: must be a probability vector for this family");
    out.initial = [x0](long long N) {
      SimplexState snapped = rational_approximation(x0, N);
      std::vector<long long> counts(snapped.dim());
      for (std::size_t j = 0; j < snapped.dim(); ++j)
        counts[j] = std::llround(snapped[j] * static_cast<double>(N));
      return OccupationState(counts, 1.0 / static_cast<double>(N));
    };
  } else {
    for (double v : initial)
      if (v < 0.0) throw ConfigError("model.initial: negative entry");
    out.initial = [initial](long long N) {
      std::vector<long long> counts(initial.size());
      for (std::size_t j = 0; j < initial.size(); ++j)
        counts[j] = std::llround(initial[j] * static_cast<double>(N));
      return OccupationState(counts, 1.0 / static_cast<double>(N));
    };
  }

  out.principal = parse_principal(root.value("principal", json()),
                                  out.payoff ? out.payoff->num_strategies() : out.dim);

  const json num = root.value("numerics", json());
  if (!num.is_null()) {
    detail::check_keys(num, "numerics",
                       {"method", "h_ode", "rtol", "atol", "grid_m", "b_points", "tau"});
    std::string method = detail::get_or<std::string>(num, "numerics", "method", "rk45");
    if (method == "rk4")
      out.step.method = StepMethod::rk4_fixed;
    else if (method == "rk45")
      out.step.method = StepMethod::rk45_adaptive;
    else
      throw ConfigError("numerics.method: expected rk4 or rk45");
    out.step.h_ode = detail::get_or<double>(num, "numerics", "h_ode", out.step.h_ode);
    out.step.rtol = detail::get_or<double>(num, "numerics", "rtol", out.step.rtol);
    out.step.atol = detail::get_or<double>(num, "numerics", "atol", out.step.atol);
    out.grid_m = detail::get_or<std::size_t>(num, "numerics", "grid_m", out.grid_m);
    out.b_points = detail::get_or<std::size_t>(num, "numerics", "b_points", out.b_points);
    out.tau = detail::get_or<double>(num, "numerics", "tau", out.tau);
  }

  const json ex = root.value("experiment", json());
  if (!ex.is_null()) {
    detail::check_keys(ex, "experiment",
                       {"t_end", "n_runs", "master_seed", "N_values", "beta",
                        "horizon_steps", "observable", "bound_order"});
    out.t_end = detail::get_or<double>(ex, "experiment", "t_end", out.t_end);
    out.n_runs = detail::get_or<std::size_t>(ex, "experiment", "n_runs", out.n_runs);
    out.master_seed =
        detail::get_or<std::uint64_t>(ex, "experiment", "master_seed", out.master_seed);
    out.N_values =
        detail::get_or<std::vector<long long>>(ex, "experiment", "N_values", {});
    if (ex.contains("beta")) out.beta = detail::get<double>(ex, "experiment", "beta");
    out.horizon_steps =
        detail::get_or<std::size_t>(ex, "experiment", "horizon_steps", out.horizon_steps);
    out.bound_order =
        detail::get_or<double>(ex, "experiment", "bound_order", out.bound_order);
    out.observable = parse_observable(ex.value("observable", json()));
  } else {
    out.observable = parse_observable(json());
  }
  if (out.t_end <= 0.0) throw ConfigError("experiment.t_end: must be positive");
  return out;
}

inline ParsedModel parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse(root);
}

}  // namespace kinevo::config

#endif  // KINEVO_CONFIG_HPP
