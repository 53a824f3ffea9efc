#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "stackjd/config.hpp"
#include "stackjd/csvio.hpp"
#include "stackjd/equilibrium.hpp"
#include "stackjd/errors.hpp"
#include "stackjd/follower.hpp"
#include "stackjd/leader.hpp"
#include "stackjd/rng.hpp"
#include "stackjd/simulate.hpp"
#include "stackjd/verify.hpp"

namespace fs = std::filesystem;
using namespace stackjd;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string case_selection;
  int paths = -1;
  long long seed = -1;
  int threads = 0;
  bool dump_paths = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("config", args.config_path, "configuration file (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory (default: $STACKJD_OUT or .)");
  cmd->add_option("--case", args.case_selection, "leader route: auto|case1|case2");
  cmd->add_option("--paths", args.paths, "Monte Carlo path count override");
  cmd->add_option("--seed", args.seed, "base seed override");
}

RunConfig load(const CommonArgs& args) {
  RunConfig cfg = load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (!args.case_selection.empty()) {
    if (args.case_selection != "auto" && args.case_selection != "case1" &&
        args.case_selection != "case2")
      throw ConfigError("--case", "expected auto, case1, or case2");
    cfg.case_selection = args.case_selection;
  }
  if (args.paths >= 0) {
    if (args.paths < 2) throw ConfigError("--paths", "must be at least 2");
    cfg.paths = args.paths;
  }
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);

  ValidationReport val = validate_model(cfg.model, cfg.costs);
  if (!val.accepted()) {
    for (const auto& e : val.errors) std::cerr << "config error: " << e << "\n";
    throw ConfigError(args.config_path, "model rejected by validation");
  }

  if (cfg.out_dir.empty()) {
    const char* env = std::getenv("STACKJD_OUT");
    cfg.out_dir = env && *env ? env : ".";
  }
  fs::create_directories(cfg.out_dir);
  return cfg;
}

leader::Case pick_case(const RunConfig& cfg) {
  ValidationReport val = validate_model(cfg.model, cfg.costs);
  if (cfg.case_selection == "case1") {
    if (!val.case1_eligible)
      throw SolverError(SolverFault::SingularBlock, cfg.model.grid.t0,
                        "leader ineligible: case1 requires unit jumps");
    return leader::Case::One;
  }
  if (cfg.case_selection == "case2") {
    if (!val.case2_eligible)
      throw SolverError(SolverFault::SingularBlock, cfg.model.grid.t0,
                        "leader ineligible: case2 requires G2 = 0");
    return leader::Case::Two;
  }
  if (val.case1_eligible) return leader::Case::One;
  if (val.case2_eligible) return leader::Case::Two;
  throw SolverError(SolverFault::SingularBlock, cfg.model.grid.t0,
                    "leader ineligible: marked jumps with G2 != 0");
}

std::string out_path(const RunConfig& cfg, const char* name) {
  return (fs::path(cfg.out_dir) / name).string();
}

struct Solved {
  leader::Case which;
  follower::Solution fsol;
  leader::Solution lsol;
  equilibrium::FeedbackPair pair;
};

Solved solve_all(const RunConfig& cfg) {
  Solved s{pick_case(cfg), follower::solve(cfg.model, cfg.costs, cfg.condition_cap), {}, {}};
  s.lsol = s.which == leader::Case::One
               ? leader::solve_case1(cfg.model, cfg.costs, s.fsol, cfg.condition_cap)
               : leader::solve_case2(cfg.model, cfg.costs, s.fsol, cfg.condition_cap);
  s.pair = equilibrium::synthesize(cfg.model, cfg.costs, s.fsol, s.lsol);
  return s;
}

int cmd_solve(const CommonArgs& args) {
  RunConfig cfg = load(args);
  Solved s = solve_all(cfg);

  csvio::write_follower_csv(out_path(cfg, "follower.csv"), cfg.model, s.fsol);
  csvio::write_leader_csv(out_path(cfg, "leader.csv"), cfg.model, s.lsol);
  csvio::write_gains_csv(out_path(cfg, "gains.csv"), s.pair);

  double cost = leader::optimal_cost(s.lsol, cfg.model.a);
  std::cout << "route: " << (s.which == leader::Case::One ? "case1" : "case2") << "\n"
            << "leader optimal cost a'P11(t0)a = " << csvio::fmt(cost) << "\n";
  return kExitOk;
}

int cmd_simulate(const CommonArgs& args) {
  RunConfig cfg = load(args);
  Solved s = solve_all(cfg);

  simulate::EnsembleResult ens = simulate::run_ensemble(cfg.model, cfg.costs, s.lsol,
                                                        s.pair, cfg.paths, cfg.seed,
                                                        args.threads);
  std::vector<csvio::EnsembleRow> rows(static_cast<size_t>(cfg.paths));
  for (int i = 0; i < cfg.paths; ++i)
    rows[static_cast<size_t>(i)] = {i, ens.J1[static_cast<size_t>(i)],
                                    ens.J2[static_cast<size_t>(i)],
                                    ens.jumps[static_cast<size_t>(i)]};
  csvio::write_ensemble_csv(out_path(cfg, "ensemble.csv"), rows);

  if (args.dump_paths) {
    std::vector<simulate::Path> dump;
    int count = std::min(cfg.paths, 16);
    for (int i = 0; i < count; ++i)
      dump.push_back(simulate::sample_closed_loop_path(
          cfg.model, s.lsol, s.pair, cfg.model.a, derive_seed(cfg.seed, static_cast<std::uint64_t>(i))));
    csvio::write_paths_csv(out_path(cfg, "paths.csv"), dump);
  }

  double J1_formula = leader::optimal_cost(s.lsol, cfg.model.a);
  GridFunction Sigma = simulate::second_moment(cfg.model, s.lsol, cfg.model.a);
  auto [J1_ode, J2_ode] = simulate::expected_costs(cfg.model, cfg.costs, s.lsol, s.pair, Sigma);

  std::cout << "paths: " << cfg.paths << " seed: " << cfg.seed << "\n"
            << "J1: mc = " << csvio::fmt(ens.estJ1.mean) << " se = " << csvio::fmt(ens.estJ1.se)
            << " formula = " << csvio::fmt(J1_formula)
            << " moment-ode = " << csvio::fmt(J1_ode) << "\n"
            << "J2: mc = " << csvio::fmt(ens.estJ2.mean) << " se = " << csvio::fmt(ens.estJ2.se)
            << " moment-ode = " << csvio::fmt(J2_ode) << "\n";
  return kExitOk;
}

int cmd_verify(const CommonArgs& args) {
  RunConfig cfg = load(args);
  const ModelSpec& model = cfg.model;
  const CostSpec& costs = cfg.costs;
  ValidationReport val = validate_model(model, costs);
  const double dt = model.grid.dt();

  std::vector<verify::TestReport> reports = verify::structural_checks(model, costs);
  follower::Solution fsol = follower::solve(model, costs, cfg.condition_cap);

  {
    verify::ResidualReport r =
        verify::riccati_residual(fsol.P, follower::riccati_rhs_field(model, costs, cfg.condition_cap));
    verify::TestReport rep;
    rep.name = "follower_residual";
    rep.statistic = r.max_residual;
    rep.band = rep.tolerance = 10.0 * dt * dt;
    rep.dt = dt;
    rep.status = rep.statistic <= rep.band ? verify::TestReport::Status::Pass
                                           : verify::TestReport::Status::Fail;
    reports.push_back(rep);
  }

  auto leader_checks = [&](leader::Case which, const std::string& tag) {
    leader::Solution lsol = which == leader::Case::One
                                ? leader::solve_case1(model, costs, fsol, cfg.condition_cap)
                                : leader::solve_case2(model, costs, fsol, cfg.condition_cap);
    verify::ResidualReport r = verify::riccati_residual(
        lsol.Pcal, leader::riccati_rhs_field(model, costs, fsol, which, cfg.condition_cap));
    verify::TestReport rep;
    rep.name = "leader_residual_" + tag;
    rep.statistic = r.max_residual;
    rep.band = rep.tolerance = 10.0 * dt * dt;
    rep.dt = dt;
    rep.status = rep.statistic <= rep.band ? verify::TestReport::Status::Pass
                                           : verify::TestReport::Status::Fail;
    reports.push_back(rep);

    verify::ConsistencyReport c = verify::fbsde_consistency(model, costs, fsol, lsol);
    verify::TestReport drift;
    drift.name = "fbsde_drift_" + tag;
    drift.statistic = c.drift_residual;
    drift.band = drift.tolerance = 10.0 * dt * dt;
    drift.dt = dt;
    drift.status = drift.statistic <= drift.band ? verify::TestReport::Status::Pass
                                                 : verify::TestReport::Status::Fail;
    reports.push_back(drift);

    verify::TestReport lin;
    lin.name = "fbsde_linsys_" + tag;
    lin.statistic = c.linsys_residual;
    lin.band = lin.tolerance = 1e-8;
    lin.dt = dt;
    lin.status = lin.statistic <= lin.band ? verify::TestReport::Status::Pass
                                           : verify::TestReport::Status::Fail;
    reports.push_back(lin);

    reports.push_back(verify::leader_cost_test(model, costs, which, cfg.paths, cfg.seed));
  };
  if (val.case1_eligible) leader_checks(leader::Case::One, "case1");
  if (val.case2_eligible) leader_checks(leader::Case::Two, "case2");

  std::vector<Eigen::VectorXd> ones_u1 =
      verify::constant_path(Eigen::VectorXd::Ones(model.m1), model.grid.node_count());
  std::vector<Eigen::VectorXd> ones_v =
      verify::constant_path(Eigen::VectorXd::Ones(model.m2), model.grid.node_count());

  reports.push_back(verify::perturbation_test(model, costs, fsol, ones_u1, ones_v,
                                              cfg.perturbation_eps, cfg.paths, cfg.seed));
  reports.push_back(verify::certificate_test(model, costs, ones_u1, cfg.paths, cfg.seed));
  reports.push_back(verify::degeneration_test(model, costs));

  csvio::write_report_csv(out_path(cfg, "verify_report.csv"), reports);

  bool any_fail = false;
  for (const auto& r : reports) {
    const char* status = r.status == verify::TestReport::Status::Pass   ? "PASS"
                         : r.status == verify::TestReport::Status::Fail ? "FAIL"
                                                                        : "SKIP";
    std::cout << status << " " << r.name << " statistic=" << csvio::fmt(r.statistic)
              << " band=" << csvio::fmt(r.band) << "\n";
    any_fail = any_fail || r.failed();
  }
  return any_fail ? kExitVerifyFailed : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Leader-follower stochastic game solver for jump diffusions"};
  app.require_subcommand(1);

  CommonArgs solve_args, sim_args, verify_args;
  CLI::App* solve = app.add_subcommand("solve", "integrate the Riccati systems, write tables");
  add_common(solve, solve_args);
  CLI::App* sim = app.add_subcommand("simulate", "closed-loop Monte Carlo ensemble");
  add_common(sim, sim_args);
  sim->add_option("--threads", sim_args.threads, "worker count (result independent)");
  sim->add_flag("--dump-paths", sim_args.dump_paths, "write per-path trajectories");
  CLI::App* ver = app.add_subcommand("verify", "run the verification suite");
  add_common(ver, verify_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(solve_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (ver->parsed()) return cmd_verify(verify_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
