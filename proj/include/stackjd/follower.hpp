#pragma once

#include <vector>

#include "stackjd/grid.hpp"
#include "stackjd/model.hpp"

namespace stackjd::follower {

// Feedback algebra derived from the follower Riccati matrix at one time.
struct Gains {
  Eigen::MatrixXd Rhat2;      // m2 x m2, effective control weight
  Eigen::MatrixXd Rhat2_inv;  // m2 x m2
  Eigen::MatrixXd Shat2;      // n x m2, state coupling
  Eigen::MatrixXd Shat1;      // m2 x m1, leader-control coupling
  double rcond = 0.0;
};

// Closed-loop coefficients of the follower best response. Per-mark entries
// are indexed like the model's jump marks.
struct HatCoefficients {
  Eigen::MatrixXd Ahat, Chat;            // n x n
  Eigen::MatrixXd Bhat2, Hhat2, Htilde2; // n x n
  std::vector<Eigen::MatrixXd> Khat2;    // per mark, n x n
  std::vector<Eigen::MatrixXd> Ktilde2;  // per mark, n x n
  std::vector<Eigen::MatrixXd> Fhat;     // per mark, n x n
  std::vector<std::vector<Eigen::MatrixXd>> Kbar2;  // mark x mark, n x n
  Eigen::MatrixXd Bhat1, Dhat1;          // n x m1
  std::vector<Eigen::MatrixXd> Ghat1;    // per mark, n x m1
  Eigen::MatrixXd Hhat1;                 // m1 x n
  std::vector<Eigen::MatrixXd> Khat1;    // per mark, m1 x n
};

struct Solution {
  GridFunction P;                    // n x n Riccati matrix per node
  std::vector<Gains> gains;          // per node
  std::vector<HatCoefficients> hats; // per node
  double cond_cap = 1e12;

  const TimeGrid& grid() const { return P.grid(); }
};

// Effective weights at time s for a given Riccati matrix. Throws
// SolverError{SingularGain} when Rhat2 fails the condition cap.
Gains gains_at(const Eigen::MatrixXd& P, const ModelSpec& model, const CostSpec& costs,
               double s, double cond_cap = 1e12);

HatCoefficients hats_at(const Eigen::MatrixXd& P, const Gains& g, const ModelSpec& model,
                        double s);

// Backward integration of the follower integro-Riccati equation with terminal
// value M2; the result is re-symmetrized after every step.
Solution solve(const ModelSpec& model, const CostSpec& costs, double cond_cap = 1e12);

// d/ds P as a reusable field (residual checks, reference integrations).
std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)> riccati_rhs_field(
    const ModelSpec& model, const CostSpec& costs, double cond_cap = 1e12);

// Multipliers of the feedback law
//   u2 = Kx x - (Kf_B2 phi + Kf_D2 theta + sum_k w_k Kf_G2[k] psi_k + Kf_S1 u1).
struct FeedbackMultipliers {
  Eigen::MatrixXd Kx;                  // m2 x n
  Eigen::MatrixXd Kf_B2, Kf_D2;        // m2 x n
  std::vector<Eigen::MatrixXd> Kf_G2;  // per mark, m2 x n
  Eigen::MatrixXd Kf_S1;               // m2 x m1
};

FeedbackMultipliers feedback_gain(const Solution& sol, const ModelSpec& model,
                                  const CostSpec& costs, double s);

// Offset equation of the best response for a deterministic leader control
// sampled on the grid; terminal value zero.
GridFunction solve_phi(const ModelSpec& model, const CostSpec& costs, const Solution& sol,
                       const std::vector<Eigen::VectorXd>& u1);

// Certified minimal follower cost for the given deterministic leader control
// (trapezoidal quadrature on the grid).
double cost_certificate(const ModelSpec& model, const CostSpec& costs, const Solution& sol,
                        const std::vector<Eigen::VectorXd>& u1, const GridFunction& phi,
                        const Eigen::VectorXd& a);

}  // namespace stackjd::follower
