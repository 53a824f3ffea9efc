#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "stackjd/rng.hpp"
#include "stackjd/simulate.hpp"
#include "stackjd/verify.hpp"

using namespace stackjd;
using namespace stackjd::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Synth {
  follower::Solution fsol;
  leader::Solution lsol;
  equilibrium::FeedbackPair pair;
};

Synth synth_case1(const ModelSpec& m, const CostSpec& c) {
  Synth s{follower::solve(m, c), {}, {}};
  s.lsol = leader::solve_case1(m, c, s.fsol);
  s.pair = equilibrium::synthesize(m, c, s.fsol, s.lsol);
  return s;
}

}  // namespace

TEST_CASE("closed loop: a quiescent game leaves the state constant") {
  ModelSpec m = analytic_riccati_model(24);
  m.B2 = Coeff::scalar(0.0);
  m.a = VectorXd::Constant(1, 1.5);
  CostSpec c = analytic_riccati_costs();
  c.Q1 = Coeff::scalar(0.0);
  c.Q2 = Coeff::scalar(0.0);
  c.M1 = MatrixXd::Zero(1, 1);
  c.M2 = MatrixXd::Zero(1, 1);
  Synth s = synth_case1(m, c);
  simulate::Path p = simulate::sample_closed_loop_path(m, s.lsol, s.pair, m.a, 42);
  for (const auto& X : p.X) {
    CHECK(X(0) == 1.5);
    CHECK(X(1) == 0.0);
  }
}

TEST_CASE("path reconstruction from stored increments is exact") {
  ModelSpec m = reference_case1_model(50);
  CostSpec c = reference_costs();
  Synth s = synth_case1(m, c);
  simulate::Path p = simulate::sample_closed_loop_path(m, s.lsol, s.pair, m.a, 977);

  VectorXd X = p.X[0];
  double dt = m.grid.dt();
  for (int i = 0; i < m.grid.steps; ++i) {
    const leader::NodeGain& node = s.lsol.nodes[i];
    VectorXd next = X + dt * (node.Acl * X) + p.dB[i] * (node.Ccl * X);
    for (int k = 0; k < m.jumps.mark_count(); ++k) {
      double w = m.jumps.weight(k);
      next += (static_cast<double>(p.dN[i][k]) - w * dt) * (node.Fcl[k] * X);
    }
    X = next;
    CHECK((X - p.X[i + 1]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pure compensated jump keeps the sample mean at the start value") {
  // dx = G1 u1 (dN - lambda dt) with u1 = 1: a martingale started at 0.
  ModelSpec m = analytic_riccati_model(100);
  m.B2 = Coeff::scalar(0.0);
  m.B1 = Coeff::scalar(0.0);
  m.G1 = {Coeff::scalar(1.0)};
  m.jumps = JumpSpec::unit(1.5);
  m.a = VectorXd::Zero(1);
  CostSpec c = analytic_riccati_costs();
  follower::Solution fsol = follower::solve(m, c);
  GridFunction phi = follower::solve_phi(
      m, c, fsol, verify::constant_path(VectorXd::Ones(1), m.grid.node_count()));
  auto ones = verify::constant_path(VectorXd::Ones(1), m.grid.node_count());
  auto zero_v = verify::constant_path(VectorXd::Zero(1), m.grid.node_count());

  auto sampler = [&](std::uint64_t seed) {
    simulate::Path p = simulate::sample_follower_perturbed_path(m, c, fsol, ones, phi,
                                                                zero_v, 0.0, m.a, seed);
    return p.X[m.grid.steps](0);
  };
  simulate::Estimate est = simulate::monte_carlo(sampler, 10000, 2024);
  CHECK(std::abs(est.mean) <= 3.0 * est.se);
}

TEST_CASE("drift-only dynamics reproduce the exponential within O(dt)") {
  ModelSpec m = analytic_riccati_model(1000);
  m.A = Coeff::scalar(1.0);
  m.B2 = Coeff::scalar(0.0);
  m.a = VectorXd::Ones(1);
  CostSpec c = analytic_riccati_costs();
  c.M2 = MatrixXd::Zero(1, 1);
  Synth s = synth_case1(m, c);
  simulate::Path p = simulate::sample_closed_loop_path(m, s.lsol, s.pair, m.a, 5);
  double e = std::exp(1.0);
  CHECK(std::abs(p.X[m.grid.steps](0) - e) <= 2.0 * e * m.grid.dt());
}

TEST_CASE("cost accumulation: terminal-only and constant-state quadratures") {
  ModelSpec m = analytic_riccati_model(100);
  m.B2 = Coeff::scalar(0.0);
  m.a = VectorXd::Constant(1, 2.0);
  CostSpec c = analytic_riccati_costs();
  c.Q1 = Coeff::scalar(0.0);
  c.Q2 = Coeff::scalar(0.0);
  c.M1 = MatrixXd::Ones(1, 1);
  c.M2 = MatrixXd::Zero(1, 1);
  Synth s = synth_case1(m, c);
  simulate::Path p = simulate::sample_closed_loop_path(m, s.lsol, s.pair, m.a, 7);
  auto [J1, J2] = simulate::accumulate_costs(p, m, c);
  CHECK(J1 == doctest::Approx(4.0).epsilon(1e-12));  // |x(T)|^2, constant path
  CHECK(J2 == 0.0);

  CostSpec c2 = c;
  c2.Q1 = Coeff::scalar(1.0);
  c2.M1 = MatrixXd::Zero(1, 1);
  auto [J1r, J2r] = simulate::accumulate_costs(p, m, c2);
  CHECK(J1r == doctest::Approx(4.0).epsilon(1e-9));  // left-rectangle of a constant
  CHECK(J2r == 0.0);
}

TEST_CASE("monte_carlo: constant sampler, determinism, normal-mean sanity") {
  auto constant = [](std::uint64_t) { return 5.0; };
  simulate::Estimate est = simulate::monte_carlo(constant, 100, 1);
  CHECK(est.mean == 5.0);
  CHECK(est.se == 0.0);

  auto noisy = [](std::uint64_t seed) {
    Rng rng(seed);
    return rng.normal();
  };
  simulate::Estimate a = simulate::monte_carlo(noisy, 10000, 31415);
  simulate::Estimate b = simulate::monte_carlo(noisy, 10000, 31415);
  CHECK(a.mean == b.mean);
  CHECK(a.se == b.se);
  CHECK(std::abs(a.mean) <= 3.0 / 100.0);
  CHECK(a.se == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("monte_carlo and ensembles are bit-identical across worker counts") {
  ModelSpec m = reference_case1_model(40);
  CostSpec c = reference_costs();
  Synth s = synth_case1(m, c);

  simulate::EnsembleResult e1 = simulate::run_ensemble(m, c, s.lsol, s.pair, 500, 99, 1);
  simulate::EnsembleResult e4 = simulate::run_ensemble(m, c, s.lsol, s.pair, 500, 99, 4);
  simulate::EnsembleResult e7 = simulate::run_ensemble(m, c, s.lsol, s.pair, 500, 99, 7);
  CHECK(e1.estJ1.mean == e4.estJ1.mean);
  CHECK(e1.estJ2.se == e4.estJ2.se);
  CHECK(e1.estJ1.mean == e7.estJ1.mean);
  for (size_t i = 0; i < e1.J1.size(); ++i) {
    CHECK(e1.J1[i] == e4.J1[i]);
    CHECK(e1.J2[i] == e7.J2[i]);
    CHECK(e1.jumps[i] == e4.jumps[i]);
  }
}

TEST_CASE("weak convergence sanity: halving dt moves the estimate within noise") {
  ModelSpec coarse = reference_case1_model(50);
  CostSpec costs = reference_costs();
  Synth sc = synth_case1(coarse, costs);
  simulate::EnsembleResult ec = simulate::run_ensemble(coarse, costs, sc.lsol, sc.pair,
                                                       4000, 555, 0);

  ModelSpec fine = refine(coarse, 2);
  CostSpec fine_costs = refine(costs, coarse.grid, 2);
  Synth sf = synth_case1(fine, fine_costs);
  simulate::EnsembleResult ef = simulate::run_ensemble(fine, fine_costs, sf.lsol, sf.pair,
                                                       4000, 777, 0);

  double gap = std::abs(ec.estJ1.mean - ef.estJ1.mean);
  CHECK(gap <= 3.0 * (ec.estJ1.se + ef.estJ1.se) + 0.05 * std::abs(ec.estJ1.mean));
}

TEST_CASE("second-moment route matches the Riccati cost identity") {
  ModelSpec m = reference_case1_model(400);
  CostSpec c = reference_costs();
  Synth s = synth_case1(m, c);
  GridFunction Sigma = simulate::second_moment(m, s.lsol, m.a);
  auto [J1, J2] = simulate::expected_costs(m, c, s.lsol, s.pair, Sigma);
  double formula = leader::optimal_cost(s.lsol, m.a);
  CHECK(J1 == doctest::Approx(formula).epsilon(5e-4));
  CHECK(std::isfinite(J2));
}

TEST_CASE("per-path seeds are order independent") {
  CHECK(derive_seed(10, 3) == derive_seed(10, 3));
  CHECK(derive_seed(10, 3) != derive_seed(10, 4));
  CHECK(derive_seed(10, 3) != derive_seed(11, 3));
}
