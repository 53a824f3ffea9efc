#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "stackjd/errors.hpp"
#include "stackjd/integrators.hpp"
#include "stackjd/leader.hpp"

using namespace stackjd;
using namespace stackjd::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd diag2(double x) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 0) = m(1, 1) = x;
  return m;
}

MatrixXd anti2(double x) {
  MatrixXd m = MatrixXd::Zero(2, 2);
  m(0, 1) = m(1, 0) = x;
  return m;
}

MatrixXd top2(double x) {
  MatrixXd m = MatrixXd::Zero(2, 1);
  m(0, 0) = x;
  return m;
}

MatrixXd right2(double x) {
  MatrixXd m = MatrixXd::Zero(1, 2);
  m(0, 1) = x;
  return m;
}

// Hand-sized doubled-system blocks for the gain algebra tests (n = 1, m1 = 1).
leader::AugBlocks hand_blocks() {
  leader::AugBlocks b;
  b.A = diag2(0.3);
  b.B2 = anti2(-0.5);
  b.Hhat = anti2(-0.35);
  b.C = diag2(0.4);
  b.Htilde = anti2(-0.3);
  b.Q = MatrixXd::Zero(2, 2);
  b.B1 = top2(0.7);
  b.D1 = top2(0.6);
  b.H1 = right2(0.55);
  b.Khat = {anti2(-0.25)};
  b.Ktilde = {anti2(-0.2)};
  b.F = {diag2(0.45)};
  b.G1 = {top2(0.5)};
  b.K1m = {right2(0.65)};
  b.Kbar = {{anti2(-0.15)}};
  return b;
}

MatrixXd hand_P() {
  MatrixXd P(2, 2);
  P << 0.8, 0.1, -0.2, 0.5;
  return P;
}

ModelSpec zero_leader_cross_model(int steps = 60) {
  // Active follower channels but no leader cost or leader input channels.
  ModelSpec m = reference_case1_model(steps);
  m.B1 = Coeff::scalar(0.0);
  m.D1 = Coeff::scalar(0.0);
  m.G1 = {Coeff::scalar(0.0)};
  return m;
}

}  // namespace

TEST_CASE("augment: block layout mirrors the follower closed loop") {
  ModelSpec m = reference_case1_model(20);
  CostSpec c = reference_costs();
  follower::Solution fsol = follower::solve(m, c);
  leader::AugmentedModel aug = leader::augment(m, c, fsol);

  const follower::HatCoefficients& h = fsol.hats[0];
  const leader::AugBlocks& b = aug.nodes[0];
  CHECK(b.A(0, 0) == h.Ahat(0, 0));
  CHECK(b.A(1, 1) == h.Ahat(0, 0));
  CHECK(b.A(0, 1) == 0.0);
  CHECK(b.B2(0, 1) == h.Bhat2(0, 0));
  CHECK(b.B2(1, 0) == h.Bhat2(0, 0));
  CHECK(b.B2(0, 0) == 0.0);
  CHECK((b.B2 - b.B2.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(b.Q(0, 0) == c.Q1.eval(m.grid, 0.0)(0, 0));
  CHECK(b.Q(1, 1) == 0.0);
  CHECK(aug.M1big(0, 0) == c.M1(0, 0));
  CHECK(aug.M1big(1, 1) == 0.0);
  CHECK(b.B1(0, 0) == h.Bhat1(0, 0));
  CHECK(b.B1(1, 0) == 0.0);
  CHECK(b.H1(0, 0) == 0.0);
  CHECK(b.H1(0, 1) == h.Hhat1(0, 0));
}

TEST_CASE("augment: a fully quiescent model leaves only the cost blocks") {
  ModelSpec m = analytic_riccati_model(10);
  m.B2 = Coeff::scalar(0.0);
  CostSpec c = analytic_riccati_costs();
  c.Q1 = Coeff::scalar(0.9);
  c.M1 = MatrixXd::Constant(1, 1, 0.4);
  c.M2 = MatrixXd::Zero(1, 1);
  follower::Solution fsol = follower::solve(m, c);
  leader::AugmentedModel aug = leader::augment(m, c, fsol);
  for (const auto& b : aug.nodes) {
    CHECK(b.A.cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.B2.cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.Hhat.cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.Q(0, 0) == 0.9);
  }
  CHECK(aug.M1big(0, 0) == 0.4);
}

TEST_CASE("unit-jump gains: zero Riccati matrix collapses the coupling") {
  leader::AugBlocks b = hand_blocks();
  MatrixXd P = MatrixXd::Zero(2, 2);
  leader::CaseOneGains g = leader::case1_gains(P, b, MatrixXd::Constant(1, 1, 1.2), 2.0, 0.5);
  CHECK((g.A11 - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.A12.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.A21.cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.A22 - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.R1eff(0, 0) == doctest::Approx(1.2).epsilon(1e-15));
  // H1eff = H1 + lambda*K1m
  CHECK(g.H1eff(0, 0) == 0.0);
  CHECK(g.H1eff(0, 1) == doctest::Approx(0.55 + 2.0 * 0.65).epsilon(1e-14));
}

TEST_CASE("unit-jump gains: frozen reference values") {
  leader::CaseOneGains g =
      leader::case1_gains(hand_P(), hand_blocks(), MatrixXd::Constant(1, 1, 1.2), 2.0, 0.5);
  CHECK(g.R1eff(0, 0) == doctest::Approx(2.0598882976538575).epsilon(1e-12));
  CHECK(g.H1eff(0, 0) == doctest::Approx(1.4070475761840684).epsilon(1e-12));
  CHECK(g.H1eff(0, 1) == doctest::Approx(1.5765090225851623).epsilon(1e-12));
  CHECK(g.F11(0, 0) == doctest::Approx(0.5453719928456656).epsilon(1e-12));
  CHECK(g.F11(1, 0) == doctest::Approx(-0.47840220698470926).epsilon(1e-12));
  CHECK(g.schur_verified);

  // The assembled inverse check: A * Ahat = I within 1e-8.
  MatrixXd A(4, 4), Ah(4, 4);
  A << g.A11, g.A12, g.A21, g.A22;
  Ah << g.Ahat11, g.Ahat12, g.Ahat21, g.Ahat22;
  CHECK((A * Ah - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("unit-jump gains: jump-free blocks reduce the coupling matrix") {
  leader::AugBlocks b = hand_blocks();
  b.Khat = {MatrixXd::Zero(2, 2)};
  b.Ktilde = {MatrixXd::Zero(2, 2)};
  b.Kbar = {{MatrixXd::Zero(2, 2)}};
  b.K1m = {MatrixXd::Zero(1, 2)};
  b.F = {MatrixXd::Zero(2, 2)};
  b.G1 = {MatrixXd::Zero(2, 1)};
  leader::CaseOneGains g =
      leader::case1_gains(hand_P(), b, MatrixXd::Constant(1, 1, 1.2), 2.0, 0.5);
  CHECK(g.A12.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.A21.cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.A22 - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.F21.cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.F22.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit-jump gains: singular coupling block is reported") {
  leader::AugBlocks b = hand_blocks();
  b.Htilde = anti2(1.0);
  MatrixXd P = anti2(1.0);  // P * Htilde = I -> A11 = 0
  CHECK_THROWS_AS(
      leader::case1_gains(P, b, MatrixXd::Constant(1, 1, 1.2), 2.0, 0.5),
      SolverError);
}

TEST_CASE("G2=0 gains: zero Riccati matrix and frozen reference values") {
  leader::AugBlocks b = hand_blocks();
  b.F = {diag2(0.45), diag2(0.25)};
  b.G1 = {top2(0.5), top2(0.3)};
  b.K1m = {right2(0.65), right2(0.35)};
  b.Khat = {MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)};
  b.Ktilde = {MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)};
  b.Kbar = {{MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)},
            {MatrixXd::Zero(2, 2), MatrixXd::Zero(2, 2)}};
  JumpSpec jumps = JumpSpec::finite({-0.5, 1.0}, {1.0, 0.6});

  leader::CaseTwoGains z =
      leader::case2_gains(MatrixXd::Zero(2, 2), b, MatrixXd::Constant(1, 1, 1.2), jumps, 0.5);
  CHECK(z.Rhat1(0, 0) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(z.Bhat1(0, 0) == 0.0);
  CHECK(z.Bhat1(0, 1) == doctest::Approx(0.55 + 1.0 * 0.65 + 0.6 * 0.35).epsilon(1e-14));
  CHECK(z.F1.cwiseAbs().maxCoeff() == 0.0);
  CHECK(z.F2[0].cwiseAbs().maxCoeff() == 0.0);

  leader::CaseTwoGains g =
      leader::case2_gains(hand_P(), b, MatrixXd::Constant(1, 1, 1.2), jumps, 0.5);
  CHECK(g.Rhat1(0, 0) == doctest::Approx(1.7521465779875562).epsilon(1e-12));
  CHECK(g.Bhat1(0, 0) == doctest::Approx(1.0226938425230638).epsilon(1e-12));
  CHECK(g.Bhat1(0, 1) == doctest::Approx(1.4107824501180004).epsilon(1e-12));
  CHECK(g.F1(0, 0) == doctest::Approx(0.1106129004576996).epsilon(1e-12));
  CHECK(g.F1(1, 1) == doctest::Approx(0.4259193173807879).epsilon(1e-12));
}

TEST_CASE("G2=0 gains: identity shortcut when Htilde vanishes") {
  leader::AugBlocks b = hand_blocks();
  b.Htilde = MatrixXd::Zero(2, 2);
  JumpSpec jumps = JumpSpec::unit(2.0);
  MatrixXd P = hand_P();
  leader::CaseTwoGains g =
      leader::case2_gains(P, b, MatrixXd::Constant(1, 1, 1.2), jumps, 0.5);
  MatrixXd PCp = P * b.C + P * b.Hhat.transpose() * P;
  MatrixXd K1 = g.Rhat1.inverse() * g.Bhat1;
  MatrixXd expect = PCp - P * b.D1 * K1;
  CHECK((g.F1 - expect).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("leader solve: no cost and no leader channels give a zero solution") {
  ModelSpec m = zero_leader_cross_model();
  CostSpec c = reference_costs();
  c.Q1 = Coeff::scalar(0.0);
  c.M1 = MatrixXd::Zero(1, 1);
  follower::Solution fsol = follower::solve(m, c);

  leader::Solution l1 = leader::solve_case1(m, c, fsol);
  CHECK(l1.Pcal.max_abs() == 0.0);

  ModelSpec m2 = m;
  m2.G2 = {Coeff::scalar(0.0)};
  follower::Solution fsol2 = follower::solve(m2, c);
  leader::Solution l2 = leader::solve_case2(m2, c, fsol2);
  CHECK(l2.Pcal.max_abs() == 0.0);
}

TEST_CASE("leader solve: terminal condition and cost-block placement are exact") {
  ModelSpec m = reference_case1_model(80);
  CostSpec c = reference_costs();
  follower::Solution fsol = follower::solve(m, c);
  leader::Solution lsol = leader::solve_case1(m, c, fsol);

  MatrixXd M1big = MatrixXd::Zero(2, 2);
  M1big(0, 0) = c.M1(0, 0);
  CHECK((lsol.Pcal.at(m.grid.steps) - M1big).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("leader solve: no symmetrization is applied to the Riccati matrix") {
  // The solve must be the raw backward integration; symmetry of the result is
  // a property of the data, never enforced.
  ModelSpec m = reference_twostate_model(60);
  CostSpec c = reference_twostate_costs();
  follower::Solution fsol = follower::solve(m, c);
  leader::Solution lsol = leader::solve_case1(m, c, fsol);

  MatrixXd M1big = MatrixXd::Zero(4, 4);
  M1big.topLeftCorner(2, 2) = c.M1;
  GridFunction raw = integrate_backward(
      leader::riccati_rhs_field(m, c, fsol, leader::Case::One), M1big, m.grid);
  for (int i = 0; i < lsol.Pcal.size(); ++i)
    CHECK((lsol.Pcal.at(i) - raw.at(i)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("jump-free model: both leader routes coincide") {
  ModelSpec m = strip_jumps(reference_case1_model(200));
  CostSpec c = reference_costs();
  follower::Solution fsol = follower::solve(m, c);
  leader::Solution l1 = leader::solve_case1(m, c, fsol);
  leader::Solution l2 = leader::solve_case2(m, c, fsol);
  double diff = 0.0;
  for (int i = 0; i < l1.Pcal.size(); ++i)
    diff = std::max(diff, (l1.Pcal.at(i) - l2.Pcal.at(i)).cwiseAbs().maxCoeff());
  CHECK(diff <= 1e-8);
}

TEST_CASE("small-intensity limit approaches the stripped model linearly") {
  CostSpec c = reference_costs();
  ModelSpec stripped = strip_jumps(reference_case1_model(100));
  follower::Solution fs = follower::solve(stripped, c);
  leader::Solution base = leader::solve_case1(stripped, c, fs);

  auto diff_at = [&](double lambda) {
    ModelSpec m = reference_case1_model(100);
    m.jumps = JumpSpec::unit(lambda);
    follower::Solution f = follower::solve(m, c);
    leader::Solution l = leader::solve_case1(m, c, f);
    double d = 0.0;
    for (int i = 0; i < l.Pcal.size(); ++i)
      d = std::max(d, (l.Pcal.at(i) - base.Pcal.at(i)).cwiseAbs().maxCoeff());
    return d;
  };

  double d2 = diff_at(1e-2);
  double d3 = diff_at(1e-3);
  CHECK(d3 / d2 > 0.03);  // O(lambda): one decade in lambda ~ one decade in gap
  CHECK(d3 / d2 < 0.3);
}

TEST_CASE("optimal cost reads the upper-left block") {
  TimeGrid grid{0.0, 1.0, 4};
  MatrixXd P = MatrixXd::Zero(4, 4);
  P(0, 0) = 2.0;
  P(1, 1) = 3.0;
  leader::Solution sol;
  sol.Pcal = GridFunction::constant(grid, P);
  Eigen::VectorXd a(2);
  a << 1.0, 1.0;
  CHECK(leader::optimal_cost(sol, a) == 5.0);
  CHECK(leader::optimal_cost(sol, Eigen::VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("route preconditions are enforced") {
  ModelSpec m = reference_case2_model(20);  // marked jumps
  CostSpec c = reference_costs();
  follower::Solution fsol = follower::solve(m, c);
  CHECK_THROWS_AS(leader::solve_case1(m, c, fsol), std::invalid_argument);

  ModelSpec g2 = reference_case1_model(20);  // G2 != 0
  follower::Solution fsol2 = follower::solve(g2, c);
  CHECK_THROWS_AS(leader::solve_case2(g2, c, fsol2), std::invalid_argument);
}
