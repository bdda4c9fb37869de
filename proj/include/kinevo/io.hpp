#ifndef KINEVO_IO_HPP
#define KINEVO_IO_HPP

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "kinevo/equilibria.hpp"
#include "kinevo/harness.hpp"
#include "kinevo/markov.hpp"
#include "kinevo/planning.hpp"

namespace kinevo::io {

using nlohmann::json;

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

/// CSV schema: t, b_1..b_r, s_1..s_d (controls before states).
inline std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << std::setprecision(17);
  std::size_t r = traj.controls.empty() ? 0 : traj.controls.front().size();
  std::size_t d = traj.states.empty() ? 0 : traj.states.front().size();
  os << "t";
  for (std::size_t i = 1; i <= r; ++i) os << ",b_" << i;
  for (std::size_t i = 1; i <= d; ++i) os << ",s_" << i;
  os << "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    os << traj.times[k];
    for (std::size_t i = 0; i < r; ++i) os << "," << traj.controls[k][i];
    for (std::size_t i = 0; i < d; ++i) os << "," << traj.states[k][i];
    os << "\n";
  }
  return os.str();
}

inline json ensemble_json(const EnsembleResult& res, std::uint64_t master_seed) {
  return json{{"g_mean", res.mean},
              {"g_stderr", res.std_error},
              {"n_runs", res.n_runs},
              {"master_seed", master_seed},
              {"blocked_rate_max", res.blocked_rate_max}};
}

inline json equilibrium_json(const EquilibriumRecord& rec) {
  json j{{"x", rec.x.weights},
         {"support", rec.support},
         {"residual", rec.residual},
         {"payoff_spread", rec.payoff_spread},
         {"stable_boundary", rec.in_omega_hat}};
  if (rec.nash_eps) j["nash_eps"] = *rec.nash_eps;
  return j;
}

inline json equilibria_json(const std::vector<EquilibriumRecord>& recs) {
  json arr = json::array();
  for (const auto& r : recs) arr.push_back(equilibrium_json(r));
  return json{{"equilibria", arr}};
}

inline json value_table_json(const ValueTable& V) {
  return json{{"d", V.grid.d}, {"m", V.grid.m}, {"values", V.values}};
}

inline json policy_table_json(const PolicyTable& P) {
  json acts = json::array();
  for (const auto& a : P.actions) acts.push_back(a);
  return json{{"d", P.grid.d}, {"m", P.grid.m}, {"actions", acts}};
}

inline json rate_report_json(const RateReport& rep) {
  return json{{"N_values", rep.N_values},
              {"errors", rep.errors},
              {"stderrs", rep.stderrs},
              {"noise_dominated", rep.noise_dominated},
              {"fitted_order", rep.fitted_order},
              {"bound_order", rep.bound_order},
              {"fit_skipped", rep.fit_skipped},
              {"monotone_ok", rep.monotone_ok},
              {"pass", rep.pass},
              {"ode_value", rep.ode_value},
              {"blocked_rate_max", rep.blocked_rate_max}};
}

inline std::string rate_report_csv(const RateReport& rep) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "N,error,stderr,noise_dominated\n";
  for (std::size_t i = 0; i < rep.N_values.size(); ++i)
    os << rep.N_values[i] << "," << rep.errors[i] << "," << rep.stderrs[i] << ","
       << (rep.noise_dominated[i] ? 1 : 0) << "\n";
  return os.str();
}

}  // namespace kinevo::io

#endif  // KINEVO_IO_HPP
