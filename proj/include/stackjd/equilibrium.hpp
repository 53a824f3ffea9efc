#pragma once

#include <utility>
#include <vector>

#include "stackjd/leader.hpp"

namespace stackjd::equilibrium {

// Time-indexed affine gain tables on the doubled state X = [x; beta]:
// u1 = -K1(s) X, u2 = -K2(s) X.
struct FeedbackPair {
  leader::Case which = leader::Case::One;
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> K1;  // per node, m1 x 2n
  std::vector<Eigen::MatrixXd> K2;  // per node, m2 x 2n
};

FeedbackPair synthesize(const ModelSpec& model, const CostSpec& costs,
                        const follower::Solution& fsol, const leader::Solution& lsol);

// Gain tables interpolated linearly in s; exact at the nodes.
std::pair<Eigen::VectorXd, Eigen::VectorXd> evaluate_controls(const FeedbackPair& pair,
                                                              double s,
                                                              const Eigen::VectorXd& X);

}  // namespace stackjd::equilibrium
