// Command-line front end: model configs in, CSV/JSON artifacts out.
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kinevo/config.hpp"
#include "kinevo/io.hpp"

namespace fs = std::filesystem;
using kinevo::config::ConfigError;
using kinevo::config::ParsedModel;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitExperimentFail = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "model configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override experiment.master_seed");
  cmd->add_option("--threads", opts.threads, "worker threads for ensembles")
      ->check(CLI::PositiveNumber);
}

ParsedModel load(const CommonOpts& opts) {
  ParsedModel model = kinevo::config::parse_file(opts.config_path);
  if (opts.seed) model.master_seed = *opts.seed;
  fs::create_directories(opts.out_dir);
  kinevo::io::write_text((fs::path(opts.out_dir) / "config.json").string(),
                         model.resolved.dump(2) + "\n");
  return model;
}

void write_json(const CommonOpts& opts, const std::string& name, const json& j) {
  kinevo::io::write_text((fs::path(opts.out_dir) / name).string(), j.dump(2) + "\n");
}

int run_simulate(const CommonOpts& opts) {
  ParsedModel model = load(opts);
  kinevo::OccupationState x0 = model.initial(model.N);
  kinevo::Trajectory traj = kinevo::simulate(model.builder, x0, model.principal,
                                             model.t_end, model.master_seed);
  kinevo::io::write_text((fs::path(opts.out_dir) / "trajectory.csv").string(),
                         kinevo::io::trajectory_csv(traj));
  kinevo::EnsembleResult ens =
      kinevo::ensemble_mean(model.builder, x0, model.principal, model.t_end,
                            model.observable, std::max<std::size_t>(2, model.n_runs),
                            model.master_seed, opts.threads);
  write_json(opts, "run.json", kinevo::io::ensemble_json(ens, model.master_seed));
  return kExitOk;
}

int run_integrate(const CommonOpts& opts) {
  ParsedModel model = load(opts);
  std::vector<double> x0 = model.initial(model.N).scaled();
  kinevo::Trajectory traj =
      kinevo::integrate(model.drift, x0, model.principal, model.t_end, model.step);
  kinevo::io::write_text((fs::path(opts.out_dir) / "trajectory.csv").string(),
                         kinevo::io::trajectory_csv(traj));
  write_json(opts, "run.json",
             json{{"t_end", model.t_end},
                  {"final_state", traj.final_state()},
                  {"observable", model.observable(traj.final_state())},
                  {"steps", traj.size()}});
  return kExitOk;
}

int run_equilibria(const CommonOpts& opts) {
  ParsedModel model = load(opts);
  if (!model.payoff)
    throw ConfigError("equilibria: this command needs a pairwise or kth_order payoff");
  std::size_t d = model.payoff->num_strategies();
  kinevo::FixedPointOptions fopts;
  fopts.kappa = model.kappa;
  std::vector<kinevo::EquilibriumRecord> all;
  for (std::size_t mask = 0; mask + 1 < (1ULL << d); ++mask) {
    std::vector<std::size_t> zero_set;
    for (std::size_t k = 0; k < d; ++k)
      if (mask & (1ULL << k)) zero_set.push_back(k);
    for (auto& rec :
         kinevo::find_fixed_points(*model.payoff, model.principal, zero_set, fopts)) {
      rec.nash_eps = kinevo::check_epsilon_nash(
          kinevo::rational_approximation(rec.x, model.N), *model.payoff, model.principal,
          model.N);
      all.push_back(std::move(rec));
    }
  }
  write_json(opts, "equilibria.json", kinevo::io::equilibria_json(all));
  return kExitOk;
}

int run_plan(const CommonOpts& opts) {
  ParsedModel model = load(opts);
  std::size_t d = model.payoff ? model.payoff->num_strategies() : model.dim;
  kinevo::SimplexGrid grid;
  grid.d = d;
  grid.m = model.grid_m;
  grid.validate();
  kinevo::ValueTable V0 = kinevo::ValueTable::zeros(grid);
  kinevo::ShapleySpec spec;
  spec.tau = model.tau;
  spec.b_points = model.b_points;
  spec.step = model.step;

  json log = json::array();
  if (model.beta) {
    kinevo::DiscountedResult res = kinevo::discounted_value(
        V0, model.principal, model.drift, spec, *model.beta);
    for (std::size_t k = 0; k < res.sup_changes.size(); ++k)
      log.push_back(json{{"sweep", k + 1}, {"sup_change", res.sup_changes[k]}});
    write_json(opts, "value_table.json", kinevo::io::value_table_json(res.value));
    write_json(opts, "policy_table.json", kinevo::io::policy_table_json(res.policy));
  } else {
    kinevo::ValueIterationResult res = kinevo::value_iterate(
        V0, model.principal, model.drift, spec, model.horizon_steps);
    for (std::size_t k = 0; k < res.sup_changes.size(); ++k)
      log.push_back(json{{"sweep", k + 1}, {"sup_change", res.sup_changes[k]}});
    write_json(opts, "value_table.json", kinevo::io::value_table_json(res.value));
    write_json(opts, "policy_table.json",
               kinevo::io::policy_table_json(res.policies.back()));
  }
  write_json(opts, "iteration_log.json", log);
  return kExitOk;
}

int run_lln(const CommonOpts& opts) {
  ParsedModel model = load(opts);
  if (model.N_values.size() < 2)
    throw ConfigError("lln: experiment.N_values needs at least 2 entries");
  kinevo::LlnInstance inst;
  inst.builder = model.builder;
  inst.drift = model.drift;
  inst.principal = model.principal;
  inst.initial = model.initial;
  inst.bound_order = model.bound_order;
  inst.step = model.step;
  kinevo::RateReport rep =
      kinevo::lln_experiment(inst, model.observable, model.t_end, model.N_values,
                             model.n_runs, model.master_seed, opts.threads);
  write_json(opts, "rate_report.json", kinevo::io::rate_report_json(rep));
  kinevo::io::write_text((fs::path(opts.out_dir) / "rate_report.csv").string(),
                         kinevo::io::rate_report_csv(rep));
  if (!rep.pass) {
    std::cerr << "lln: convergence check FAILED (fitted order " << rep.fitted_order
              << ", bound " << rep.bound_order << ")\n";
    return kExitExperimentFail;
  }
  return kExitOk;
}

int run_validate(const CommonOpts& opts) {
  kinevo::config::parse_file(opts.config_path);
  std::cout << "config ok\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evolutionary pressure-resistance game engine"};
  app.require_subcommand(1);

  CommonOpts opts;
  CLI::App* sim = app.add_subcommand("simulate", "exact stochastic trajectory + ensemble");
  CLI::App* integ = app.add_subcommand("integrate", "kinetic ODE trajectory");
  CLI::App* eq = app.add_subcommand("equilibria", "fixed points and eps-Nash audit");
  CLI::App* plan = app.add_subcommand("plan", "value iteration for the principal");
  CLI::App* lln = app.add_subcommand("lln", "convergence-rate experiment");
  CLI::App* val = app.add_subcommand("validate", "check a config without running");
  for (CLI::App* cmd : {sim, integ, eq, plan, lln, val}) add_common(cmd, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(opts);
    if (integ->parsed()) return run_integrate(opts);
    if (eq->parsed()) return run_equilibria(opts);
    if (plan->parsed()) return run_plan(opts);
    if (lln->parsed()) return run_lln(opts);
    if (val->parsed()) return run_validate(opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
