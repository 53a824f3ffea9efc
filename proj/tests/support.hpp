#pragma once

#include "stackjd/model.hpp"

namespace stackjd::testing {

// Scalar unit-jump model with every channel active; both Riccati systems stay
// well conditioned on [0, 1].
inline ModelSpec reference_case1_model(int steps = 100) {
  ModelSpec m;
  m.n = m.m1 = m.m2 = 1;
  m.grid = TimeGrid{0.0, 1.0, steps};
  m.jumps = JumpSpec::unit(2.0);
  m.A = Coeff::scalar(0.2);
  m.C = Coeff::scalar(0.3);
  m.B1 = Coeff::scalar(1.0);
  m.D1 = Coeff::scalar(0.1);
  m.B2 = Coeff::scalar(1.0);
  m.D2 = Coeff::scalar(0.2);
  m.F = {Coeff::scalar(0.4)};
  m.G1 = {Coeff::scalar(0.3)};
  m.G2 = {Coeff::scalar(0.25)};
  m.a = Eigen::VectorXd::Ones(1);
  return m;
}

inline CostSpec reference_costs() {
  CostSpec c;
  c.Q1 = Coeff::scalar(1.0);
  c.Q2 = Coeff::scalar(0.8);
  c.R1 = Coeff::scalar(1.0);
  c.R2 = Coeff::scalar(1.0);
  c.M1 = Eigen::MatrixXd::Constant(1, 1, 0.5);
  c.M2 = Eigen::MatrixXd::Constant(1, 1, 0.5);
  return c;
}

// Scalar two-mark model with the follower control absent from the jump part.
inline ModelSpec reference_case2_model(int steps = 100) {
  ModelSpec m = reference_case1_model(steps);
  m.jumps = JumpSpec::finite({-0.5, 1.0}, {1.0, 0.6});
  m.F = {Coeff::scalar(0.3), Coeff::scalar(0.5)};
  m.G1 = {Coeff::scalar(0.2), Coeff::scalar(0.4)};
  m.G2 = {Coeff::zero(1, 1), Coeff::zero(1, 1)};
  return m;
}

// Two-state model used by the degeneration checks (to be stripped).
inline ModelSpec reference_twostate_model(int steps = 80) {
  ModelSpec m;
  m.n = 2;
  m.m1 = m.m2 = 1;
  m.grid = TimeGrid{0.0, 1.0, steps};
  m.jumps = JumpSpec::unit(1.0);
  Eigen::MatrixXd A(2, 2), C(2, 2);
  A << 0.1, 0.2, 0.0, 0.15;
  C << 0.2, 0.0, 0.1, 0.1;
  m.A = Coeff(A);
  m.C = Coeff(C);
  Eigen::MatrixXd B1(2, 1), D1(2, 1), B2(2, 1), D2(2, 1);
  B1 << 1.0, 0.0;
  D1 << 0.0, 0.1;
  B2 << 0.0, 1.0;
  D2 << 0.1, 0.0;
  m.B1 = Coeff(B1);
  m.D1 = Coeff(D1);
  m.B2 = Coeff(B2);
  m.D2 = Coeff(D2);
  Eigen::MatrixXd F(2, 2);
  F << 0.2, 0.0, 0.0, 0.3;
  m.F = {Coeff(F)};
  m.G1 = {Coeff(Eigen::MatrixXd::Constant(2, 1, 0.1))};
  m.G2 = {Coeff(Eigen::MatrixXd::Constant(2, 1, 0.2))};
  m.a = Eigen::VectorXd(2);
  m.a << 1.0, -0.5;
  return m;
}

inline CostSpec reference_twostate_costs() {
  CostSpec c;
  c.Q1 = Coeff(Eigen::MatrixXd::Identity(2, 2));
  Eigen::MatrixXd Q2(2, 2);
  Q2 << 1.0, 0.0, 0.0, 0.5;
  c.Q2 = Coeff(Q2);
  c.R1 = Coeff::scalar(1.0);
  c.R2 = Coeff::scalar(1.0);
  c.M1 = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  c.M2 = 0.3 * Eigen::MatrixXd::Identity(2, 2);
  return c;
}

// Follower Riccati reduces to dP/ds = P^2 with P(T) = 1.
inline ModelSpec analytic_riccati_model(int steps = 1000) {
  ModelSpec m;
  m.n = m.m1 = m.m2 = 1;
  m.grid = TimeGrid{0.0, 1.0, steps};
  m.jumps = JumpSpec::unit(1.0);
  m.A = Coeff::scalar(0.0);
  m.C = Coeff::scalar(0.0);
  m.B1 = Coeff::scalar(0.0);
  m.D1 = Coeff::scalar(0.0);
  m.B2 = Coeff::scalar(1.0);
  m.D2 = Coeff::scalar(0.0);
  m.F = {Coeff::scalar(0.0)};
  m.G1 = {Coeff::scalar(0.0)};
  m.G2 = {Coeff::scalar(0.0)};
  m.a = Eigen::VectorXd::Ones(1);
  return m;
}

inline CostSpec analytic_riccati_costs() {
  CostSpec c;
  c.Q1 = Coeff::scalar(0.0);
  c.Q2 = Coeff::scalar(0.0);
  c.R1 = Coeff::scalar(1.0);
  c.R2 = Coeff::scalar(1.0);
  c.M1 = Eigen::MatrixXd::Zero(1, 1);
  c.M2 = Eigen::MatrixXd::Ones(1, 1);
  return c;
}

}  // namespace stackjd::testing
