#include "stackjd/integrators.hpp"

#include "stackjd/errors.hpp"

namespace stackjd {

namespace {

Eigen::MatrixXd rk4_step(const MatrixField& rhs, double s, const Eigen::MatrixXd& M,
                         double h) {
  Eigen::MatrixXd k1 = rhs(s, M);
  Eigen::MatrixXd k2 = rhs(s + 0.5 * h, M + (0.5 * h) * k1);
  Eigen::MatrixXd k3 = rhs(s + 0.5 * h, M + (0.5 * h) * k2);
  Eigen::MatrixXd k4 = rhs(s + h, M + h * k3);
  return M + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

GridFunction march(const MatrixField& rhs, const Eigen::MatrixXd& boundary,
                   const TimeGrid& grid, const StepTransform& post_step, bool backward) {
  std::vector<Eigen::MatrixXd> values(grid.node_count());
  double h = backward ? -grid.dt() : grid.dt();
  int start = backward ? grid.steps : 0;
  int stop = backward ? 0 : grid.steps;
  int dir = backward ? -1 : 1;

  if (!boundary.allFinite())
    throw SolverError(SolverFault::BlowUp, grid.node(start), "non-finite boundary value");

  values[start] = boundary;
  for (int i = start; i != stop; i += dir) {
    double s = grid.node(i);
    Eigen::MatrixXd next = rk4_step(rhs, s, values[i], h);
    if (!next.allFinite())
      throw SolverError(SolverFault::BlowUp, grid.node(i + dir), "integration escaped");
    if (post_step) next = post_step(next);
    values[i + dir] = std::move(next);
  }
  return GridFunction(grid, std::move(values));
}

}  // namespace

GridFunction integrate_backward(const MatrixField& rhs, const Eigen::MatrixXd& terminal,
                                const TimeGrid& grid, const StepTransform& post_step) {
  return march(rhs, terminal, grid, post_step, true);
}

GridFunction integrate_forward(const MatrixField& rhs, const Eigen::MatrixXd& initial,
                               const TimeGrid& grid, const StepTransform& post_step) {
  return march(rhs, initial, grid, post_step, false);
}

}  // namespace stackjd
