#include "stackjd/verify.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "stackjd/rng.hpp"

namespace stackjd::verify {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::vector<VectorXd> resample_path(const std::vector<VectorXd>& path, const TimeGrid& grid,
                                    const TimeGrid& fine) {
  std::vector<VectorXd> out;
  out.reserve(fine.node_count());
  for (int i = 0; i < fine.node_count(); ++i) {
    double s = fine.node(i);
    int j = grid.interval_index(s);
    double w = (s - grid.node(j)) / grid.dt();
    if (w <= 0.0)
      out.push_back(path[j]);
    else if (w >= 1.0)
      out.push_back(path[j + 1]);
    else
      out.push_back((1.0 - w) * path[j] + w * path[j + 1]);
  }
  return out;
}

double quadratic_gap_reference(const ModelSpec& model, const follower::Solution& fsol,
                               const std::vector<VectorXd>& v, double eps) {
  // Left-rectangle quadrature matching the pathwise cost convention.
  double acc = 0.0;
  for (int i = 0; i < model.grid.steps; ++i)
    acc += v[i].dot(fsol.gains[i].Rhat2 * v[i]);
  return eps * eps * acc * model.grid.dt();
}

std::uint64_t shifted_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (salt + 1));
  return splitmix64(s);
}

}  // namespace

ResidualReport riccati_residual(const GridFunction& sol, const MatrixField& rhs) {
  const TimeGrid& grid = sol.grid();
  ResidualReport rep;
  rep.dt = grid.dt();
  rep.scale = 1.0 + sol.max_abs();
  for (int i = 1; i < grid.node_count() - 1; ++i) {
    MatrixXd dds = (sol.at(i + 1) - sol.at(i - 1)) / (2.0 * grid.dt());
    MatrixXd defect = dds - rhs(grid.node(i), sol.at(i));
    rep.max_residual = std::max(rep.max_residual, defect.cwiseAbs().maxCoeff() / rep.scale);
  }
  return rep;
}

ConsistencyReport fbsde_consistency(const ModelSpec& model, const CostSpec& costs,
                                    const follower::Solution& fsol,
                                    const leader::Solution& lsol) {
  const TimeGrid& grid = model.grid;
  const JumpSpec& jumps = model.jumps;
  const int K = jumps.mark_count();
  const int d = 2 * model.n;

  ConsistencyReport rep;
  rep.dt = grid.dt();

  for (int i = 0; i < grid.node_count(); ++i) {
    double s = grid.node(i);
    leader::AugBlocks blk = leader::assemble_at(model, costs, fsol, s);
    const MatrixXd& P = lsol.Pcal.at(i);
    const leader::NodeGain& maps = lsol.nodes[i];
    MatrixXd dPds = leader::riccati_rhs(P, blk, jumps, maps);
    double scale = 1.0 + P.cwiseAbs().maxCoeff();

    for (int j = 0; j < d; ++j) {
      VectorXd X = VectorXd::Zero(d);
      X(j) = 1.0;
      VectorXd Z = maps.Zmap * X;
      VectorXd u = -maps.K1 * X;

      VectorXd bsde = blk.A.transpose() * (P * X) + blk.Q * X + blk.C.transpose() * Z +
                      blk.H1.transpose() * u;
      VectorXd forward = blk.A * X + blk.B2 * (P * X) + blk.Hhat * Z + blk.B1 * u;
      for (int k = 0; k < K; ++k) {
        double w = jumps.weight(k);
        VectorXd Kk = maps.Kmap[k] * X;
        bsde += w * blk.F[k].transpose() * Kk + w * blk.K1m[k].transpose() * u;
        forward += w * blk.Khat[k] * Kk;
      }
      VectorXd drift_bsde = -bsde;
      VectorXd drift_ito = dPds * X + P * forward;
      rep.drift_residual = std::max(
          rep.drift_residual, (drift_bsde - drift_ito).cwiseAbs().maxCoeff() / scale);

      // Defect of the linear system that defines (Z, K).
      if (lsol.which == leader::Case::One) {
        const leader::CaseOneGains& g = lsol.case1[i];
        VectorXd Kk = maps.Kmap[0] * X;
        VectorXd r1 = g.A11 * Z + g.A12 * Kk - (g.B11 * X + g.B12 * u);
        VectorXd r2 = g.A21 * Z + g.A22 * Kk - (g.B21 * X + g.B22 * u);
        rep.linsys_residual =
            std::max({rep.linsys_residual, r1.cwiseAbs().maxCoeff() / 2.0,
                      r2.cwiseAbs().maxCoeff() / 2.0});
      } else {
        MatrixXd S = MatrixXd::Identity(d, d) - P * blk.Htilde;
        MatrixXd PCplus = P * blk.C + P * blk.Hhat.transpose() * P;
        VectorXd r1 = S * Z - (PCplus * X + P * blk.D1 * u);
        rep.linsys_residual = std::max(rep.linsys_residual, r1.cwiseAbs().maxCoeff() / 2.0);
        for (int k = 0; k < K; ++k) {
          VectorXd rk = maps.Kmap[k] * X - (P * blk.F[k] * X + P * blk.G1[k] * u);
          rep.linsys_residual = std::max(rep.linsys_residual, rk.cwiseAbs().maxCoeff() / 2.0);
        }
      }
    }
  }
  return rep;
}

TestReport perturbation_test(const ModelSpec& model, const CostSpec& costs,
                             const follower::Solution& fsol,
                             const std::vector<VectorXd>& u1,
                             const std::vector<VectorXd>& v, double eps, int paths,
                             std::uint64_t seed) {
  GridFunction phi = follower::solve_phi(model, costs, fsol, u1);
  VectorXd a = model.a;

  auto delta_sampler = [&](std::uint64_t path_seed) {
    simulate::Path base = simulate::sample_follower_perturbed_path(model, costs, fsol, u1,
                                                                   phi, v, 0.0, a, path_seed);
    simulate::Path pert = simulate::sample_follower_perturbed_path(model, costs, fsol, u1,
                                                                   phi, v, eps, a, path_seed);
    return simulate::accumulate_costs(pert, model, costs).second -
           simulate::accumulate_costs(base, model, costs).second;
  };

  simulate::Estimate est = simulate::monte_carlo(delta_sampler, paths, seed);
  double ref = quadratic_gap_reference(model, fsol, v, eps);

  TestReport rep;
  rep.name = "follower_perturbation";
  rep.statistic = std::abs(est.mean - ref);
  rep.se = est.se;
  rep.band = 3.0 * est.se;
  rep.dt = model.grid.dt();
  rep.tolerance = 0.0;
  rep.seed = seed;
  bool nonnegative = est.mean >= -3.0 * est.se;
  rep.status = (rep.statistic <= rep.band && nonnegative) ? TestReport::Status::Pass
                                                          : TestReport::Status::Fail;
  rep.detail = "gap=" + std::to_string(est.mean) + " exact=" + std::to_string(ref);
  return rep;
}

TestReport leader_cost_test(const ModelSpec& model, const CostSpec& costs,
                            leader::Case which, int paths, std::uint64_t seed) {
  auto run = [&](const ModelSpec& m, const CostSpec& c, std::uint64_t base)
      -> std::pair<simulate::Estimate, double> {
    follower::Solution fsol = follower::solve(m, c);
    leader::Solution lsol = which == leader::Case::One ? leader::solve_case1(m, c, fsol)
                                                       : leader::solve_case2(m, c, fsol);
    equilibrium::FeedbackPair pair = equilibrium::synthesize(m, c, fsol, lsol);
    auto sampler = [&](std::uint64_t path_seed) {
      simulate::Path p = simulate::sample_closed_loop_path(m, lsol, pair, m.a, path_seed);
      return simulate::accumulate_costs(p, m, c).first;
    };
    return {simulate::monte_carlo(sampler, paths, base), leader::optimal_cost(lsol, m.a)};
  };

  auto [coarse, formula] = run(model, costs, seed);
  ModelSpec fine_model = refine(model, 2);
  CostSpec fine_costs = refine(costs, model.grid, 2);
  auto [fine, formula_fine] = run(fine_model, fine_costs, shifted_seed(seed, 1));

  double dt = model.grid.dt();
  double chat = 2.0 * std::abs(coarse.mean - fine.mean) / dt;  // first-order bias slope
  double allowance = chat * dt;

  bool coarse_ok = std::abs(coarse.mean - formula) <= 3.0 * coarse.se + allowance;
  bool fine_ok = std::abs(fine.mean - formula_fine) <= 3.0 * fine.se + 0.5 * allowance;

  TestReport rep;
  rep.name = which == leader::Case::One ? "leader_cost_case1" : "leader_cost_case2";
  rep.statistic = std::abs(coarse.mean - formula);
  rep.se = coarse.se;
  rep.band = 3.0 * coarse.se + allowance;
  rep.dt = dt;
  rep.tolerance = allowance;
  rep.seed = seed;
  rep.status = (coarse_ok && fine_ok) ? TestReport::Status::Pass : TestReport::Status::Fail;
  rep.detail = "mc=" + std::to_string(coarse.mean) + " formula=" + std::to_string(formula) +
               " fine_gap=" + std::to_string(std::abs(fine.mean - formula_fine));
  return rep;
}

TestReport certificate_test(const ModelSpec& model, const CostSpec& costs,
                            const std::vector<VectorXd>& u1, int paths,
                            std::uint64_t seed) {
  auto run = [&](const ModelSpec& m, const CostSpec& c, const std::vector<VectorXd>& u,
                 std::uint64_t base) -> std::pair<simulate::Estimate, double> {
    follower::Solution fsol = follower::solve(m, c);
    GridFunction phi = follower::solve_phi(m, c, fsol, u);
    double cert = follower::cost_certificate(m, c, fsol, u, phi, m.a);
    std::vector<VectorXd> zero(static_cast<size_t>(m.grid.node_count()),
                               VectorXd::Zero(m.m2));
    auto sampler = [&, cert](std::uint64_t path_seed) {
      simulate::Path p = simulate::sample_follower_perturbed_path(m, c, fsol, u, phi, zero,
                                                                  0.0, m.a, path_seed);
      return simulate::accumulate_costs(p, m, c).second;
    };
    return {simulate::monte_carlo(sampler, paths, base), cert};
  };

  auto [coarse, cert] = run(model, costs, u1, seed);
  ModelSpec fine_model = refine(model, 2);
  CostSpec fine_costs = refine(costs, model.grid, 2);
  std::vector<VectorXd> fine_u1 = resample_path(u1, model.grid, fine_model.grid);
  auto [fine, cert_fine] = run(fine_model, fine_costs, fine_u1, shifted_seed(seed, 2));

  double dt = model.grid.dt();
  double chat = 2.0 * std::abs(coarse.mean - fine.mean) / dt;
  double allowance = chat * dt;

  bool coarse_ok = std::abs(coarse.mean - cert) <= 3.0 * coarse.se + allowance;
  bool fine_ok = std::abs(fine.mean - cert_fine) <= 3.0 * fine.se + 0.5 * allowance;

  TestReport rep;
  rep.name = "follower_certificate";
  rep.statistic = std::abs(coarse.mean - cert);
  rep.se = coarse.se;
  rep.band = 3.0 * coarse.se + allowance;
  rep.dt = dt;
  rep.tolerance = allowance;
  rep.seed = seed;
  rep.status = (coarse_ok && fine_ok) ? TestReport::Status::Pass : TestReport::Status::Fail;
  rep.detail = "mc=" + std::to_string(coarse.mean) + " certificate=" + std::to_string(cert);
  return rep;
}

TestReport degeneration_test(const ModelSpec& model, const CostSpec& costs) {
  TestReport rep;
  rep.name = "degeneration";
  rep.dt = model.grid.dt();
  rep.tolerance = 1e-8;

  if (!model.jump_free()) {
    rep.status = TestReport::Status::Skip;
    rep.detail = "model has jump coefficients; test applies to stripped models";
    return rep;
  }

  follower::Solution fsol = follower::solve(model, costs);
  leader::Solution l1 = leader::solve_case1(model, costs, fsol);
  leader::Solution l2 = leader::solve_case2(model, costs, fsol);
  equilibrium::FeedbackPair p1 = equilibrium::synthesize(model, costs, fsol, l1);
  equilibrium::FeedbackPair p2 = equilibrium::synthesize(model, costs, fsol, l2);

  double diff = 0.0;
  for (int i = 0; i < model.grid.node_count(); ++i) {
    diff = std::max(diff, (l1.Pcal.at(i) - l2.Pcal.at(i)).cwiseAbs().maxCoeff());
    diff = std::max(diff, (p1.K1[i] - p2.K1[i]).cwiseAbs().maxCoeff());
    diff = std::max(diff, (p1.K2[i] - p2.K2[i]).cwiseAbs().maxCoeff());
  }

  // Jump-free structure: every mark-summed coefficient must vanish.
  double structure = 0.0;
  for (int i = 0; i < model.grid.node_count(); ++i) {
    const follower::HatCoefficients& h = fsol.hats[i];
    for (const auto& m : h.Khat1) structure = std::max(structure, m.cwiseAbs().maxCoeff());
    for (const auto& m : h.Fhat) structure = std::max(structure, m.cwiseAbs().maxCoeff());
    for (const auto& m : h.Ghat1) structure = std::max(structure, m.cwiseAbs().maxCoeff());
    for (const auto& m : l1.nodes[i].Kmap)
      structure = std::max(structure, m.cwiseAbs().maxCoeff());
    for (const auto& m : l2.nodes[i].Kmap)
      structure = std::max(structure, m.cwiseAbs().maxCoeff());
  }

  rep.statistic = std::max(diff, structure);
  rep.band = rep.tolerance;
  rep.status = rep.statistic <= rep.band ? TestReport::Status::Pass : TestReport::Status::Fail;
  rep.detail = "sup_diff=" + std::to_string(diff) + " structure=" + std::to_string(structure);
  return rep;
}

std::vector<TestReport> structural_checks(const ModelSpec& model, const CostSpec& costs) {
  std::vector<TestReport> out;
  follower::Solution fsol = follower::solve(model, costs);
  const TimeGrid& grid = model.grid;

  {
    TestReport rep;
    rep.name = "follower_symmetry";
    rep.dt = grid.dt();
    rep.tolerance = 1e-10;
    for (int i = 0; i < grid.node_count(); ++i) {
      const MatrixXd& P = fsol.P.at(i);
      rep.statistic = std::max(rep.statistic, (P - P.transpose()).cwiseAbs().maxCoeff());
    }
    rep.band = rep.tolerance;
    rep.status =
        rep.statistic <= rep.band ? TestReport::Status::Pass : TestReport::Status::Fail;
    out.push_back(rep);
  }

  {
    TestReport rep;
    rep.name = "follower_terminal";
    rep.dt = grid.dt();
    rep.statistic = (fsol.P.at(grid.steps) - costs.M2).cwiseAbs().maxCoeff();
    rep.band = 0.0;
    rep.status =
        rep.statistic == 0.0 ? TestReport::Status::Pass : TestReport::Status::Fail;
    out.push_back(rep);
  }

  {
    TestReport rep;
    rep.name = "follower_semidefinite";
    rep.dt = grid.dt();
    rep.tolerance = 1e-8;
    if (!follower_standard_condition(model, costs)) {
      rep.status = TestReport::Status::Skip;
      rep.detail = "Q2, M2 psd / R2 pd condition not satisfied";
    } else {
      double min_eig = 0.0;
      for (int i = 0; i < grid.node_count(); ++i) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(fsol.P.at(i));
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
      }
      rep.statistic = -min_eig;
      rep.band = rep.tolerance;
      rep.status =
          rep.statistic <= rep.band ? TestReport::Status::Pass : TestReport::Status::Fail;
    }
    out.push_back(rep);
  }

  ValidationReport val = validate_model(model, costs);
  auto leader_terminal = [&](leader::Case which, const std::string& name) {
    TestReport rep;
    rep.name = name;
    rep.dt = grid.dt();
    follower::Solution fs = fsol;
    leader::Solution lsol = which == leader::Case::One
                                ? leader::solve_case1(model, costs, fs)
                                : leader::solve_case2(model, costs, fs);
    MatrixXd M1big = MatrixXd::Zero(2 * model.n, 2 * model.n);
    M1big.topLeftCorner(model.n, model.n) = costs.M1;
    rep.statistic = (lsol.Pcal.at(grid.steps) - M1big).cwiseAbs().maxCoeff();
    rep.band = 0.0;
    rep.status =
        rep.statistic == 0.0 ? TestReport::Status::Pass : TestReport::Status::Fail;
    return rep;
  };
  if (val.case1_eligible) out.push_back(leader_terminal(leader::Case::One, "leader_terminal_case1"));
  if (val.case2_eligible) out.push_back(leader_terminal(leader::Case::Two, "leader_terminal_case2"));

  return out;
}

std::vector<VectorXd> constant_path(const VectorXd& value, int node_count) {
  return std::vector<VectorXd>(static_cast<size_t>(node_count), value);
}

}  // namespace stackjd::verify
