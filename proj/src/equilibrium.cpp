#include "stackjd/equilibrium.hpp"

namespace stackjd::equilibrium {

FeedbackPair synthesize(const ModelSpec& model, const CostSpec& costs,
                        const follower::Solution& fsol, const leader::Solution& lsol) {
  const TimeGrid& grid = model.grid;
  const int n = model.n;
  const int K = model.jumps.mark_count();

  // Selectors of the state half and the adjoint half of X.
  Eigen::MatrixXd selx = Eigen::MatrixXd::Zero(n, 2 * n);
  selx.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd selb = Eigen::MatrixXd::Zero(n, 2 * n);
  selb.rightCols(n) = Eigen::MatrixXd::Identity(n, n);

  FeedbackPair pair;
  pair.which = lsol.which;
  pair.grid = grid;
  pair.K1.reserve(grid.node_count());
  pair.K2.reserve(grid.node_count());

  for (int i = 0; i < grid.node_count(); ++i) {
    double s = grid.node(i);
    ModelAt m = model.at(s);
    const follower::Gains& g = fsol.gains[i];
    const leader::NodeGain& node = lsol.nodes[i];
    const Eigen::MatrixXd& Ri = g.Rhat2_inv;

    // The offset processes of the follower feedback are linear in X:
    // phi = selb * Pcal * X, theta = selb * Zmap * X, psi_k = selb * Kmap_k * X.
    Eigen::MatrixXd offset = m.B2.transpose() * selb * lsol.Pcal.at(i) +
                             m.D2.transpose() * selb * node.Zmap;
    for (int k = 0; k < K; ++k)
      offset += model.jumps.weight(k) * m.G2[k].transpose() * selb * node.Kmap[k];
    offset -= g.Shat1 * node.K1;

    pair.K1.push_back(node.K1);
    pair.K2.push_back(Ri * g.Shat2.transpose() * selx + Ri * offset);
  }
  return pair;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> evaluate_controls(const FeedbackPair& pair,
                                                              double s,
                                                              const Eigen::VectorXd& X) {
  int i = pair.grid.interval_index(s);
  double w = (s - pair.grid.node(i)) / pair.grid.dt();
  Eigen::MatrixXd K1, K2;
  if (w <= 0.0) {
    K1 = pair.K1[i];
    K2 = pair.K2[i];
  } else if (w >= 1.0) {
    K1 = pair.K1[i + 1];
    K2 = pair.K2[i + 1];
  } else {
    K1 = (1.0 - w) * pair.K1[i] + w * pair.K1[i + 1];
    K2 = (1.0 - w) * pair.K2[i] + w * pair.K2[i + 1];
  }
  return {-K1 * X, -K2 * X};
}

}  // namespace stackjd::equilibrium
