#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stackjd/equilibrium.hpp"
#include "stackjd/integrators.hpp"
#include "stackjd/leader.hpp"
#include "stackjd/simulate.hpp"

namespace stackjd::verify {

// Centered-difference defect of a grid solution against its right-hand side,
// normalized by (1 + sup-norm of the solution).
struct ResidualReport {
  double max_residual = 0.0;
  double dt = 0.0;
  double scale = 0.0;
};

ResidualReport riccati_residual(const GridFunction& sol, const MatrixField& rhs);

// Drift matching of the backward component against the affine representation,
// probed with every basis vector at every node, plus the defect of the linear
// system defining the martingale maps.
struct ConsistencyReport {
  double drift_residual = 0.0;   // normalized by (1 + |Pcal|)
  double linsys_residual = 0.0;  // normalized by (1 + |X|)
  double dt = 0.0;
};

ConsistencyReport fbsde_consistency(const ModelSpec& model, const CostSpec& costs,
                                    const follower::Solution& fsol,
                                    const leader::Solution& lsol);

struct TestReport {
  enum class Status { Pass, Fail, Skip };
  std::string name;
  Status status = Status::Skip;
  double statistic = 0.0;  // measured discrepancy
  double band = 0.0;       // acceptance band for the statistic
  double se = 0.0;
  double dt = 0.0;
  double tolerance = 0.0;  // deterministic part of the band
  std::uint64_t seed = 0;
  std::string detail;

  bool failed() const { return status == Status::Fail; }
};

// Monte Carlo difference of follower costs under u2 = feedback + eps*v against
// the exact quadratic gap, with common random numbers per path index.
TestReport perturbation_test(const ModelSpec& model, const CostSpec& costs,
                             const follower::Solution& fsol,
                             const std::vector<Eigen::VectorXd>& u1,
                             const std::vector<Eigen::VectorXd>& v, double eps, int paths,
                             std::uint64_t seed);

// Monte Carlo leader cost under the synthesized equilibrium against the
// quadratic-form value, with a discretization allowance calibrated by a
// grid-halving run (the allowance scales linearly with dt).
TestReport leader_cost_test(const ModelSpec& model, const CostSpec& costs,
                            leader::Case which, int paths, std::uint64_t seed);

// Monte Carlo follower cost under the optimal response against the certified
// optimal cost, same calibration scheme.
TestReport certificate_test(const ModelSpec& model, const CostSpec& costs,
                            const std::vector<Eigen::VectorXd>& u1, int paths,
                            std::uint64_t seed);

// On a jump-free model, both leader routes must coincide: Riccati solutions,
// gain tables, and the jump-free structure of the assembled coefficients.
TestReport degeneration_test(const ModelSpec& model, const CostSpec& costs);

// Structural invariants: follower symmetry/terminal value/semidefiniteness,
// leader terminal value and weight-block placement.
std::vector<TestReport> structural_checks(const ModelSpec& model, const CostSpec& costs);

std::vector<Eigen::VectorXd> constant_path(const Eigen::VectorXd& value, int node_count);

}  // namespace stackjd::verify
