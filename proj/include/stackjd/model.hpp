#pragma once

#include <string>
#include <vector>

#include "stackjd/grid.hpp"

namespace stackjd {

// Discrete jump-arrival description. Either a single unit-size jump stream
// with intensity `intensity`, or a finite list of mark values with per-mark
// arrival intensities (weights). Integrals over the mark set are finite sums
// weighted by the intensities.
struct JumpSpec {
  enum class Kind { UnitJump, FiniteMarks };

  Kind kind = Kind::UnitJump;
  double intensity = 1.0;        // UnitJump only
  std::vector<double> marks;     // FiniteMarks only
  std::vector<double> weights;   // FiniteMarks only, per-mark intensities

  static JumpSpec unit(double lambda) {
    JumpSpec j;
    j.kind = Kind::UnitJump;
    j.intensity = lambda;
    return j;
  }
  static JumpSpec finite(std::vector<double> marks, std::vector<double> weights) {
    JumpSpec j;
    j.kind = Kind::FiniteMarks;
    j.marks = std::move(marks);
    j.weights = std::move(weights);
    return j;
  }

  int mark_count() const {
    return kind == Kind::UnitJump ? 1 : static_cast<int>(marks.size());
  }
  double mark(int k) const { return kind == Kind::UnitJump ? 1.0 : marks[k]; }
  double weight(int k) const { return kind == Kind::UnitJump ? intensity : weights[k]; }
  double total_intensity() const {
    if (kind == Kind::UnitJump) return intensity;
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

// Coefficient snapshot at a fixed time.
struct ModelAt {
  Eigen::MatrixXd A, C;                 // n x n
  Eigen::MatrixXd B1, D1;               // n x m1
  Eigen::MatrixXd B2, D2;               // n x m2
  std::vector<Eigen::MatrixXd> F;       // per mark, n x n
  std::vector<Eigen::MatrixXd> G1;      // per mark, n x m1
  std::vector<Eigen::MatrixXd> G2;      // per mark, n x m2
};

// Game dynamics: state dimension n, leader control m1, follower control m2.
//
//   dx = [A x + B1 u1 + B2 u2] ds + [C x + D1 u1 + D2 u2] dB
//        + sum_k [F_k x + G1_k u1 + G2_k u2] (dN_k - w_k ds)
struct ModelSpec {
  int n = 1, m1 = 1, m2 = 1;
  Coeff A, C, B1, D1, B2, D2;
  std::vector<Coeff> F, G1, G2;  // one entry per mark
  JumpSpec jumps;
  TimeGrid grid;
  Eigen::VectorXd a;  // initial state

  ModelAt at(double s) const;
  bool jump_free() const;  // all jump coefficient samples identically zero
};

struct CostAt {
  Eigen::MatrixXd Q1, Q2;  // n x n
  Eigen::MatrixXd R1;      // m1 x m1
  Eigen::MatrixXd R2;      // m2 x m2
};

// Quadratic weights of the leader (index 1) and follower (index 2) costs.
// Weights are symmetric but may be indefinite.
struct CostSpec {
  Coeff Q1, Q2, R1, R2;
  Eigen::MatrixXd M1, M2;  // terminal weights

  CostAt at(const TimeGrid& grid, double s) const;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> notes;
  bool case1_eligible = false;  // unit jumps (or jump-free model)
  bool case2_eligible = false;  // follower control absent from the jump part
  bool convexity_sufficient = false;  // Q1, R1, M1 psd and R2 pd at all nodes

  bool accepted() const { return errors.empty(); }
};

struct ValidationOptions {
  double symmetry_rel_tol = 1e-12;
  double psd_slack = 1e-12;
};

// Structural validation: dimensions, finiteness, weight symmetry, jump-spec
// sanity, leader-case eligibility. Never throws; all findings in the report.
ValidationReport validate_model(const ModelSpec& model, const CostSpec& costs,
                                const ValidationOptions& opts = {});

// Copy with all jump coefficient matrices zeroed (jump intensities retained).
ModelSpec strip_jumps(const ModelSpec& model);

// Exact resampling of all coefficients onto a grid with `factor` times the steps.
ModelSpec refine(const ModelSpec& model, int factor);
CostSpec refine(const CostSpec& costs, const TimeGrid& grid, int factor);

// Q2, M2 psd and R2 pd at every node; under it the follower Riccati solution
// stays positive semidefinite.
bool follower_standard_condition(const ModelSpec& model, const CostSpec& costs,
                                 double slack = 1e-12);

}  // namespace stackjd
