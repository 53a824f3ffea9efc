#pragma once

#include <functional>

#include "stackjd/grid.hpp"

namespace stackjd {

// Right-hand side of a matrix ODE: (s, M) -> dM/ds.
using MatrixField = std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)>;

// Applied to the state after every completed step (e.g. re-symmetrization).
using StepTransform = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

// Classical fixed-step RK4 from T down to t0. Node i of the result holds the
// approximation at grid.node(i). Throws SolverError{BlowUp} at the first
// non-finite stage.
GridFunction integrate_backward(const MatrixField& rhs, const Eigen::MatrixXd& terminal,
                                const TimeGrid& grid, const StepTransform& post_step = {});

// Same scheme marching t0 -> T.
GridFunction integrate_forward(const MatrixField& rhs, const Eigen::MatrixXd& initial,
                               const TimeGrid& grid, const StepTransform& post_step = {});

}  // namespace stackjd
