#include "stackjd/leader.hpp"

#include <Eigen/SVD>
#include <stdexcept>

#include "stackjd/errors.hpp"
#include "stackjd/integrators.hpp"

namespace stackjd::leader {

namespace {

double rcond_estimate(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smax <= 0.0) return 0.0;
  return smin / smax;
}

Eigen::MatrixXd diag2(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m;
  out.bottomRightCorner(n, n) = m;
  return out;
}

Eigen::MatrixXd antidiag2(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  out.topRightCorner(n, n) = m;
  out.bottomLeftCorner(n, n) = m;
  return out;
}

Eigen::MatrixXd stack_top(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), m.cols());
  out.topRows(m.rows()) = m;
  return out;
}

Eigen::MatrixXd pad_right(const Eigen::MatrixXd& m) {
  // [0 m] acting on the doubled state: picks the adjoint half.
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows(), 2 * m.cols());
  out.rightCols(m.cols()) = m;
  return out;
}

void require_finite(const Eigen::MatrixXd& m, double s, const char* what) {
  if (!m.allFinite()) throw SolverError(SolverFault::BlowUp, s, what);
}

}  // namespace

AugBlocks assemble_at(const ModelSpec& model, const CostSpec& costs,
                      const follower::Solution& fsol, double s) {
  Eigen::MatrixXd P = fsol.P.eval(s);
  follower::Gains g = follower::gains_at(P, model, costs, s, fsol.cond_cap);
  follower::HatCoefficients h = follower::hats_at(P, g, model, s);
  CostAt c = costs.at(model.grid, s);
  const int n = model.n;
  const int K = model.jumps.mark_count();

  AugBlocks b;
  b.A = diag2(h.Ahat);
  b.B2 = antidiag2(h.Bhat2);
  b.Hhat = antidiag2(h.Hhat2);
  b.C = diag2(h.Chat);
  b.Htilde = antidiag2(h.Htilde2);
  b.B1 = stack_top(h.Bhat1);
  b.D1 = stack_top(h.Dhat1);
  b.H1 = pad_right(h.Hhat1);
  b.Q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  b.Q.topLeftCorner(n, n) = c.Q1;

  b.Khat.resize(K);
  b.Ktilde.resize(K);
  b.F.resize(K);
  b.G1.resize(K);
  b.K1m.resize(K);
  b.Kbar.assign(K, std::vector<Eigen::MatrixXd>(K));
  for (int k = 0; k < K; ++k) {
    b.Khat[k] = antidiag2(h.Khat2[k]);
    b.Ktilde[k] = antidiag2(h.Ktilde2[k]);
    b.F[k] = diag2(h.Fhat[k]);
    b.G1[k] = stack_top(h.Ghat1[k]);
    b.K1m[k] = pad_right(h.Khat1[k]);
    for (int l = 0; l < K; ++l) b.Kbar[k][l] = antidiag2(h.Kbar2[k][l]);
  }
  return b;
}

AugmentedModel augment(const ModelSpec& model, const CostSpec& costs,
                       const follower::Solution& fsol) {
  AugmentedModel aug;
  aug.grid = model.grid;
  aug.nodes.reserve(model.grid.node_count());
  for (int i = 0; i < model.grid.node_count(); ++i)
    aug.nodes.push_back(assemble_at(model, costs, fsol, model.grid.node(i)));
  aug.M1big = Eigen::MatrixXd::Zero(2 * model.n, 2 * model.n);
  aug.M1big.topLeftCorner(model.n, model.n) = costs.M1;
  return aug;
}

CaseOneGains case1_gains(const Eigen::MatrixXd& Pcal, const AugBlocks& blk,
                         const Eigen::MatrixXd& R1cost, double lambda, double s,
                         double cond_cap) {
  const auto d = Pcal.rows();  // 2n
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);

  CaseOneGains g;
  g.A11 = I - Pcal * blk.Htilde;
  g.A12 = -lambda * Pcal * blk.Ktilde[0];
  g.A21 = -Pcal * blk.Ktilde[0].transpose();
  g.A22 = I - lambda * Pcal * blk.Kbar[0][0];
  g.B11 = Pcal * blk.C + Pcal * blk.Hhat.transpose() * Pcal;
  g.B12 = Pcal * blk.D1;
  g.B21 = Pcal * (blk.F[0] + blk.Khat[0].transpose() * Pcal);
  g.B22 = Pcal * blk.G1[0];

  g.rcond_A11 = rcond_estimate(g.A11);
  g.rcond_A22 = rcond_estimate(g.A22);
  const double floor = 1.0 / cond_cap;
  if (!(g.rcond_A11 > floor))
    throw SolverError(SolverFault::SingularBlock, s, "I - P*Htilde not invertible");
  if (!(g.rcond_A22 > floor))
    throw SolverError(SolverFault::SingularBlock, s, "I - lambda*P*Kbar not invertible");

  Eigen::MatrixXd A11inv = g.A11.fullPivLu().inverse();
  Eigen::MatrixXd A22inv = g.A22.fullPivLu().inverse();
  Eigen::MatrixXd S1 = g.A11 - g.A12 * A22inv * g.A21;  // Schur complement in A22
  Eigen::MatrixXd S2 = g.A22 - g.A21 * A11inv * g.A12;  // Schur complement in A11
  g.rcond_S1 = rcond_estimate(S1);
  g.rcond_S2 = rcond_estimate(S2);
  if (!(g.rcond_S1 > floor))
    throw SolverError(SolverFault::SingularBlock, s, "Schur complement (Z block) singular");
  if (!(g.rcond_S2 > floor))
    throw SolverError(SolverFault::SingularBlock, s, "Schur complement (K block) singular");

  // Dense inverse of the assembled coupling matrix is the canonical value.
  Eigen::MatrixXd Afull(2 * d, 2 * d);
  Afull << g.A11, g.A12, g.A21, g.A22;
  Eigen::MatrixXd Ainv = Afull.fullPivLu().inverse();
  require_finite(Ainv, s, "coupling-system inverse");
  g.Ahat11 = Ainv.topLeftCorner(d, d);
  g.Ahat12 = Ainv.topRightCorner(d, d);
  g.Ahat21 = Ainv.bottomLeftCorner(d, d);
  g.Ahat22 = Ainv.bottomRightCorner(d, d);

  // Cross-check against the block-inversion form when it is well conditioned.
  const double comfort = 1e-6;
  if (g.rcond_A11 > comfort && g.rcond_A22 > comfort && g.rcond_S1 > comfort &&
      g.rcond_S2 > comfort) {
    Eigen::MatrixXd h11 = S1.fullPivLu().inverse();
    Eigen::MatrixXd h12 = A11inv * g.A12 * (g.A21 * A11inv * g.A12 - g.A22).fullPivLu().inverse();
    Eigen::MatrixXd h21 = A22inv * g.A21 * (g.A12 * A22inv * g.A21 - g.A11).fullPivLu().inverse();
    Eigen::MatrixXd h22 = S2.fullPivLu().inverse();
    double scale = 1.0 + Ainv.cwiseAbs().maxCoeff();
    double mismatch = std::max({(h11 - g.Ahat11).cwiseAbs().maxCoeff(),
                                (h12 - g.Ahat12).cwiseAbs().maxCoeff(),
                                (h21 - g.Ahat21).cwiseAbs().maxCoeff(),
                                (h22 - g.Ahat22).cwiseAbs().maxCoeff()});
    g.schur_verified = mismatch <= 1e-8 * scale;
  }

  g.F11 = g.Ahat11 * g.B11 + g.Ahat12 * g.B21;
  g.F12 = g.Ahat11 * g.B12 + g.Ahat12 * g.B22;
  g.F21 = g.Ahat21 * g.B11 + g.Ahat22 * g.B21;
  g.F22 = g.Ahat21 * g.B12 + g.Ahat22 * g.B22;

  g.R1eff = R1cost + blk.D1.transpose() * g.F12 + lambda * blk.G1[0].transpose() * g.F22;
  g.H1eff = blk.B1.transpose() * Pcal + blk.H1 + lambda * blk.K1m[0] +
            blk.D1.transpose() * g.F11 + lambda * blk.G1[0].transpose() * g.F21;

  g.rcond_R = rcond_estimate(g.R1eff);
  if (!(g.rcond_R > floor))
    throw SolverError(SolverFault::SingularGain, s, "leader control weight singular");
  return g;
}

CaseTwoGains case2_gains(const Eigen::MatrixXd& Pcal, const AugBlocks& blk,
                         const Eigen::MatrixXd& R1cost, const JumpSpec& jumps, double s,
                         double cond_cap) {
  const auto d = Pcal.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
  const int K = jumps.mark_count();

  Eigen::MatrixXd S = I - Pcal * blk.Htilde;
  CaseTwoGains g;
  g.rcond_S = rcond_estimate(S);
  if (!(g.rcond_S > 1.0 / cond_cap))
    throw SolverError(SolverFault::SingularBlock, s, "I - P*Htilde not invertible");
  Eigen::MatrixXd Sinv = S.fullPivLu().inverse();

  Eigen::MatrixXd PCplus = Pcal * blk.C + Pcal * blk.Hhat.transpose() * Pcal;

  g.Rhat1 = R1cost + blk.D1.transpose() * Sinv * Pcal * blk.D1;
  g.Bhat1 = blk.B1.transpose() * Pcal + blk.H1 + blk.D1.transpose() * Sinv * PCplus;
  for (int k = 0; k < K; ++k) {
    double w = jumps.weight(k);
    g.Rhat1 += w * blk.G1[k].transpose() * Pcal * blk.G1[k];
    g.Bhat1 += w * blk.K1m[k] + w * blk.G1[k].transpose() * Pcal * blk.F[k];
  }

  g.rcond_R = rcond_estimate(g.Rhat1);
  if (!(g.rcond_R > 1.0 / cond_cap))
    throw SolverError(SolverFault::SingularGain, s, "leader control weight singular");
  Eigen::MatrixXd K1 = g.Rhat1.fullPivLu().solve(g.Bhat1);

  g.F1 = Sinv * (PCplus - Pcal * blk.D1 * K1);
  g.F2.resize(K);
  for (int k = 0; k < K; ++k) g.F2[k] = Pcal * blk.F[k] - Pcal * blk.G1[k] * K1;
  return g;
}

namespace {

struct StageMaps {
  Eigen::MatrixXd K1;    // m1 x 2n
  Eigen::MatrixXd Zmap;  // 2n x 2n
  std::vector<Eigen::MatrixXd> Kmap;  // per mark, 2n x 2n
};

StageMaps case1_maps(const CaseOneGains& g, int mark_count) {
  StageMaps m;
  m.K1 = g.R1eff.fullPivLu().solve(g.H1eff);
  m.Zmap = g.F11 - g.F12 * m.K1;
  // Unit jumps carry a single mark; for a jump-free model the map is zero and
  // is shared across whatever mark list the spec declares.
  m.Kmap.assign(mark_count, g.F21 - g.F22 * m.K1);
  return m;
}

StageMaps case2_maps(const CaseTwoGains& g) {
  StageMaps m;
  m.K1 = g.Rhat1.fullPivLu().solve(g.Bhat1);
  m.Zmap = g.F1;
  m.Kmap = g.F2;
  return m;
}

// Both routes share the drift and closed-loop assembly; they differ only in
// how the martingale maps (Zmap, Kmap) and the control gain K1 are obtained.
Eigen::MatrixXd riccati_drift(const Eigen::MatrixXd& P, const AugBlocks& blk,
                              const JumpSpec& jumps, const StageMaps& maps) {
  Eigen::MatrixXd drift = blk.A.transpose() * P + P * blk.A + blk.Q + P * blk.B2 * P +
                          (blk.C.transpose() + P * blk.Hhat) * maps.Zmap;
  Eigen::MatrixXd cross = blk.H1.transpose() + P * blk.B1;
  for (int k = 0; k < jumps.mark_count(); ++k) {
    double w = jumps.weight(k);
    cross += w * blk.K1m[k].transpose();
    drift += w * (blk.F[k].transpose() + P * blk.Khat[k]) * maps.Kmap[k];
  }
  drift -= cross * maps.K1;
  return drift;
}

void closed_loop(const Eigen::MatrixXd& P, const AugBlocks& blk, const JumpSpec& jumps,
                 const StageMaps& maps, NodeGain& node) {
  const int K = jumps.mark_count();
  node.Acl = blk.A + blk.B2 * P + blk.Hhat * maps.Zmap - blk.B1 * maps.K1;
  node.Ccl = blk.C + blk.Hhat.transpose() * P + blk.Htilde * maps.Zmap - blk.D1 * maps.K1;
  node.Fcl.resize(K);
  for (int j = 0; j < K; ++j) {
    node.Fcl[j] = blk.F[j] + blk.Khat[j].transpose() * P +
                  blk.Ktilde[j].transpose() * maps.Zmap - blk.G1[j] * maps.K1;
  }
  for (int k = 0; k < K; ++k) {
    double w = jumps.weight(k);
    node.Acl += w * blk.Khat[k] * maps.Kmap[k];
    node.Ccl += w * blk.Ktilde[k] * maps.Kmap[k];
    for (int j = 0; j < K; ++j) node.Fcl[j] += w * blk.Kbar[j][k] * maps.Kmap[k];
  }
}

Solution solve_impl(const ModelSpec& model, const CostSpec& costs,
                    const follower::Solution& fsol, double cond_cap, Case which) {
  const TimeGrid& grid = model.grid;
  const JumpSpec& jumps = model.jumps;
  const double lambda = jumps.total_intensity();

  auto stage_maps = [&](double s, const Eigen::MatrixXd& P, const AugBlocks& blk) {
    Eigen::MatrixXd R1cost = costs.R1.eval(grid, s);
    if (which == Case::One)
      return case1_maps(case1_gains(P, blk, R1cost, lambda, s, cond_cap),
                        jumps.mark_count());
    return case2_maps(case2_gains(P, blk, R1cost, jumps, s, cond_cap));
  };

  MatrixField rhs = [&](double s, const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
    AugBlocks blk = assemble_at(model, costs, fsol, s);
    return -riccati_drift(P, blk, jumps, stage_maps(s, P, blk));
  };

  Eigen::MatrixXd M1big = Eigen::MatrixXd::Zero(2 * model.n, 2 * model.n);
  M1big.topLeftCorner(model.n, model.n) = costs.M1;

  Solution sol;
  sol.which = which;
  sol.cond_cap = cond_cap;
  sol.Pcal = integrate_backward(rhs, M1big, grid);

  sol.nodes.reserve(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) {
    double s = grid.node(i);
    AugBlocks blk = assemble_at(model, costs, fsol, s);
    Eigen::MatrixXd R1cost = costs.R1.eval(grid, s);
    const Eigen::MatrixXd& P = sol.Pcal.at(i);

    StageMaps maps;
    if (which == Case::One) {
      CaseOneGains g = case1_gains(P, blk, R1cost, lambda, s, cond_cap);
      maps = case1_maps(g, jumps.mark_count());
      sol.case1.push_back(std::move(g));
    } else {
      CaseTwoGains g = case2_gains(P, blk, R1cost, jumps, s, cond_cap);
      maps = case2_maps(g);
      sol.case2.push_back(std::move(g));
    }

    NodeGain node;
    closed_loop(P, blk, jumps, maps, node);
    node.K1 = maps.K1;
    node.Zmap = maps.Zmap;
    node.Kmap = maps.Kmap;
    sol.nodes.push_back(std::move(node));
  }
  return sol;
}

}  // namespace

Solution solve_case1(const ModelSpec& model, const CostSpec& costs,
                     const follower::Solution& fsol, double cond_cap) {
  if (model.jumps.kind != JumpSpec::Kind::UnitJump && !model.jump_free())
    throw std::invalid_argument("unit-jump leader route requires unit jumps or a jump-free model");
  return solve_impl(model, costs, fsol, cond_cap, Case::One);
}

Solution solve_case2(const ModelSpec& model, const CostSpec& costs,
                     const follower::Solution& fsol, double cond_cap) {
  for (const auto& c : model.G2)
    if (!c.is_zero())
      throw std::invalid_argument("G2 = 0 leader route requires the follower control absent from the jump part");
  return solve_impl(model, costs, fsol, cond_cap, Case::Two);
}

double optimal_cost(const Solution& sol, const Eigen::VectorXd& a) {
  const int n = static_cast<int>(a.size());
  Eigen::MatrixXd P11 = sol.Pcal.at(0).topLeftCorner(n, n);
  return a.dot(P11 * a);
}

Eigen::MatrixXd riccati_rhs(const Eigen::MatrixXd& Pcal, const AugBlocks& blk,
                            const JumpSpec& jumps, const NodeGain& maps) {
  StageMaps m;
  m.K1 = maps.K1;
  m.Zmap = maps.Zmap;
  m.Kmap = maps.Kmap;
  return -riccati_drift(Pcal, blk, jumps, m);
}

std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)> riccati_rhs_field(
    const ModelSpec& model, const CostSpec& costs, const follower::Solution& fsol,
    Case which, double cond_cap) {
  return [&model, &costs, &fsol, which, cond_cap](double s, const Eigen::MatrixXd& P)
             -> Eigen::MatrixXd {
    AugBlocks blk = assemble_at(model, costs, fsol, s);
    Eigen::MatrixXd R1cost = costs.R1.eval(model.grid, s);
    StageMaps maps;
    if (which == Case::One)
      maps = case1_maps(
          case1_gains(P, blk, R1cost, model.jumps.total_intensity(), s, cond_cap),
          model.jumps.mark_count());
    else
      maps = case2_maps(case2_gains(P, blk, R1cost, model.jumps, s, cond_cap));
    return -riccati_drift(P, blk, model.jumps, maps);
  };
}

}  // namespace stackjd::leader
