#pragma once

#include <vector>

#include "stackjd/follower.hpp"
#include "stackjd/grid.hpp"
#include "stackjd/model.hpp"

namespace stackjd::leader {

// Coefficients of the doubled (forward + adjoint) state system at one time.
// All square blocks are 2n x 2n; B1/D1/G1 are 2n x m1; H1/K1m are m1 x 2n.
struct AugBlocks {
  Eigen::MatrixXd A, B2, Hhat, C, Htilde, Q;
  Eigen::MatrixXd B1, D1;
  Eigen::MatrixXd H1;
  std::vector<Eigen::MatrixXd> Khat, Ktilde, F, G1, K1m;       // per mark
  std::vector<std::vector<Eigen::MatrixXd>> Kbar;              // mark x mark
};

// Doubled-system coefficients tabulated on the grid.
struct AugmentedModel {
  TimeGrid grid;
  std::vector<AugBlocks> nodes;
  Eigen::MatrixXd M1big;  // terminal weight diag(M1, 0)
};

// Blocks at an arbitrary time, rebuilt from the interpolated follower solution.
AugBlocks assemble_at(const ModelSpec& model, const CostSpec& costs,
                      const follower::Solution& fsol, double s);

AugmentedModel augment(const ModelSpec& model, const CostSpec& costs,
                       const follower::Solution& fsol);

enum class Case { One, Two };

// Unit-jump gain algebra: the martingale coefficients (Z, K) solve a coupled
// 2x2 block system; its inverse feeds the leader control weight R1eff and the
// state coupling H1eff.
struct CaseOneGains {
  Eigen::MatrixXd A11, A12, A21, A22;          // 2n x 2n coupling blocks
  Eigen::MatrixXd B11, B12, B21, B22;          // right-hand-side blocks
  Eigen::MatrixXd Ahat11, Ahat12, Ahat21, Ahat22;  // blocks of the inverse
  Eigen::MatrixXd F11, F12, F21, F22;
  Eigen::MatrixXd R1eff;  // m1 x m1
  Eigen::MatrixXd H1eff;  // m1 x 2n
  double rcond_A11 = 0, rcond_A22 = 0, rcond_S1 = 0, rcond_S2 = 0, rcond_R = 0;
  bool schur_verified = false;  // Schur-form inverse matched the dense solve
};

// Gain algebra when the follower control is absent from the jump part: only
// (I - P Htilde) needs inversion.
struct CaseTwoGains {
  Eigen::MatrixXd Rhat1;            // m1 x m1
  Eigen::MatrixXd Bhat1;            // m1 x 2n
  Eigen::MatrixXd F1;               // 2n x 2n, Z = F1 X
  std::vector<Eigen::MatrixXd> F2;  // per mark, 2n x 2n, K_k = F2[k] X
  double rcond_S = 0, rcond_R = 0;
};

// Per-node maps shared by both cases.
struct NodeGain {
  Eigen::MatrixXd K1;               // m1 x 2n, u1 = -K1 X
  Eigen::MatrixXd Zmap;             // 2n x 2n
  std::vector<Eigen::MatrixXd> Kmap;  // per mark, 2n x 2n
  Eigen::MatrixXd Acl, Ccl;         // closed-loop coefficients, 2n x 2n
  std::vector<Eigen::MatrixXd> Fcl; // per mark, 2n x 2n
};

struct Solution {
  Case which = Case::One;
  GridFunction Pcal;                 // 2n x 2n, not symmetric in general
  std::vector<CaseOneGains> case1;   // per node when which == One
  std::vector<CaseTwoGains> case2;   // per node when which == Two
  std::vector<NodeGain> nodes;
  double cond_cap = 1e12;

  const TimeGrid& grid() const { return Pcal.grid(); }
  int half_dim() const { return static_cast<int>(Pcal.at(0).rows()) / 2; }
};

CaseOneGains case1_gains(const Eigen::MatrixXd& Pcal, const AugBlocks& blk,
                         const Eigen::MatrixXd& R1cost, double lambda, double s,
                         double cond_cap = 1e12);

CaseTwoGains case2_gains(const Eigen::MatrixXd& Pcal, const AugBlocks& blk,
                         const Eigen::MatrixXd& R1cost, const JumpSpec& jumps, double s,
                         double cond_cap = 1e12);

// Backward integration of the leader integro-Riccati equation for unit jumps.
// Every block invertibility condition is monitored per evaluation; no
// symmetrization is applied to the solution.
Solution solve_case1(const ModelSpec& model, const CostSpec& costs,
                     const follower::Solution& fsol, double cond_cap = 1e12);

// Same for the G2 = 0 route, valid for any finite mark set.
Solution solve_case2(const ModelSpec& model, const CostSpec& costs,
                     const follower::Solution& fsol, double cond_cap = 1e12);

// Quadratic-form cost a' P11(t0) a from the upper-left block (no symmetrization).
double optimal_cost(const Solution& sol, const Eigen::VectorXd& a);

// d/ds Pcal re-evaluated from stored gain maps; used by the residual checks.
Eigen::MatrixXd riccati_rhs(const Eigen::MatrixXd& Pcal, const AugBlocks& blk,
                            const JumpSpec& jumps, const NodeGain& maps);

// d/ds Pcal as a reusable field for the chosen route.
std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)> riccati_rhs_field(
    const ModelSpec& model, const CostSpec& costs, const follower::Solution& fsol,
    Case which, double cond_cap = 1e12);

}  // namespace stackjd::leader
