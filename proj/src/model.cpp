#include "stackjd/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>
#include <sstream>

namespace stackjd {

namespace {

std::string shape_str(Eigen::Index r, Eigen::Index c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

void check_coeff(const Coeff& c, const std::string& name, int rows, int cols,
                 const TimeGrid& grid, std::vector<std::string>& errors) {
  if (c.empty()) {
    errors.push_back(name + ": missing samples");
    return;
  }
  if (c.sample_count() != 1 && c.sample_count() != grid.node_count()) {
    errors.push_back(name + ": expected 1 or " + std::to_string(grid.node_count()) +
                     " samples, got " + std::to_string(c.sample_count()));
  }
  for (const auto& m : c.samples()) {
    if (m.rows() != rows || m.cols() != cols) {
      errors.push_back(name + ": expected shape " + shape_str(rows, cols) + ", got " +
                       shape_str(m.rows(), m.cols()));
      return;
    }
  }
  if (!c.all_finite()) errors.push_back(name + ": non-finite entry");
}

void check_mark_coeff(const std::vector<Coeff>& v, const std::string& name, int rows,
                      int cols, int mark_count, const TimeGrid& grid,
                      std::vector<std::string>& errors) {
  if (static_cast<int>(v.size()) != mark_count) {
    errors.push_back(name + ": expected " + std::to_string(mark_count) +
                     " per-mark entries, got " + std::to_string(v.size()));
    return;
  }
  for (size_t k = 0; k < v.size(); ++k)
    check_coeff(v[k], name + "[" + std::to_string(k) + "]", rows, cols, grid, errors);
}

bool symmetric_within(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void check_symmetric(const Coeff& c, const std::string& name, double rel_tol,
                     std::vector<std::string>& errors) {
  for (const auto& m : c.samples()) {
    if (!symmetric_within(m, rel_tol)) {
      errors.push_back(name + ": nonsymmetric weight");
      return;
    }
  }
}

double min_eig(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  return es.eigenvalues().minCoeff();
}

bool psd_samples(const Coeff& c, double slack) {
  for (const auto& m : c.samples())
    if (min_eig(m) < -slack) return false;
  return true;
}

bool pd_samples(const Coeff& c, double slack) {
  for (const auto& m : c.samples())
    if (min_eig(m) <= slack) return false;
  return true;
}

}  // namespace

ModelAt ModelSpec::at(double s) const {
  ModelAt out;
  out.A = A.eval(grid, s);
  out.C = C.eval(grid, s);
  out.B1 = B1.eval(grid, s);
  out.D1 = D1.eval(grid, s);
  out.B2 = B2.eval(grid, s);
  out.D2 = D2.eval(grid, s);
  int K = jumps.mark_count();
  out.F.reserve(K);
  out.G1.reserve(K);
  out.G2.reserve(K);
  for (int k = 0; k < K; ++k) {
    out.F.push_back(F[k].eval(grid, s));
    out.G1.push_back(G1[k].eval(grid, s));
    out.G2.push_back(G2[k].eval(grid, s));
  }
  return out;
}

bool ModelSpec::jump_free() const {
  for (const auto& c : F)
    if (!c.is_zero()) return false;
  for (const auto& c : G1)
    if (!c.is_zero()) return false;
  for (const auto& c : G2)
    if (!c.is_zero()) return false;
  return true;
}

CostAt CostSpec::at(const TimeGrid& grid, double s) const {
  return CostAt{Q1.eval(grid, s), Q2.eval(grid, s), R1.eval(grid, s), R2.eval(grid, s)};
}

ValidationReport validate_model(const ModelSpec& model, const CostSpec& costs,
                                const ValidationOptions& opts) {
  ValidationReport rep;
  auto& errors = rep.errors;

  if (model.n < 1 || model.m1 < 1 || model.m2 < 1)
    errors.push_back("dimensions: n, m1, m2 must be positive");
  if (!model.grid.valid()) errors.push_back("grid: requires t0 < T and steps >= 1");
  if (model.a.size() != model.n)
    errors.push_back("initial_state: expected length " + std::to_string(model.n));
  if (!model.a.allFinite()) errors.push_back("initial_state: non-finite entry");

  const auto& j = model.jumps;
  if (j.kind == JumpSpec::Kind::UnitJump) {
    if (!(j.intensity > 0.0) || !std::isfinite(j.intensity))
      errors.push_back("jumps.intensity: must be positive");
  } else {
    if (j.marks.empty()) errors.push_back("jumps.marks: must be nonempty");
    if (j.marks.size() != j.weights.size())
      errors.push_back("jumps.weights: must match marks in length");
    for (double w : j.weights)
      if (!(w > 0.0) || !std::isfinite(w)) {
        errors.push_back("jumps.weights: must be positive");
        break;
      }
    std::set<double> distinct(j.marks.begin(), j.marks.end());
    if (distinct.size() != j.marks.size()) errors.push_back("jumps.marks: must be distinct");
  }

  if (!model.grid.valid() || model.n < 1 || model.m1 < 1 || model.m2 < 1) return rep;

  const int n = model.n, m1 = model.m1, m2 = model.m2;
  const TimeGrid& g = model.grid;
  check_coeff(model.A, "dynamics.A", n, n, g, errors);
  check_coeff(model.C, "dynamics.C", n, n, g, errors);
  check_coeff(model.B1, "dynamics.B1", n, m1, g, errors);
  check_coeff(model.D1, "dynamics.D1", n, m1, g, errors);
  check_coeff(model.B2, "dynamics.B2", n, m2, g, errors);
  check_coeff(model.D2, "dynamics.D2", n, m2, g, errors);
  check_mark_coeff(model.F, "dynamics.F", n, n, j.mark_count(), g, errors);
  check_mark_coeff(model.G1, "dynamics.G1", n, m1, j.mark_count(), g, errors);
  check_mark_coeff(model.G2, "dynamics.G2", n, m2, j.mark_count(), g, errors);

  check_coeff(costs.Q1, "costs.Q1", n, n, g, errors);
  check_coeff(costs.Q2, "costs.Q2", n, n, g, errors);
  check_coeff(costs.R1, "costs.R1", m1, m1, g, errors);
  check_coeff(costs.R2, "costs.R2", m2, m2, g, errors);
  if (costs.M1.rows() != n || costs.M1.cols() != n)
    errors.push_back("costs.M1: expected shape " + shape_str(n, n));
  if (costs.M2.rows() != n || costs.M2.cols() != n)
    errors.push_back("costs.M2: expected shape " + shape_str(n, n));

  if (!errors.empty()) return rep;

  check_symmetric(costs.Q1, "costs.Q1", opts.symmetry_rel_tol, errors);
  check_symmetric(costs.Q2, "costs.Q2", opts.symmetry_rel_tol, errors);
  check_symmetric(costs.R1, "costs.R1", opts.symmetry_rel_tol, errors);
  check_symmetric(costs.R2, "costs.R2", opts.symmetry_rel_tol, errors);
  if (!symmetric_within(costs.M1, opts.symmetry_rel_tol))
    errors.push_back("costs.M1: nonsymmetric weight");
  if (!symmetric_within(costs.M2, opts.symmetry_rel_tol))
    errors.push_back("costs.M2: nonsymmetric weight");

  bool g2_zero = true;
  for (const auto& c : model.G2)
    if (!c.is_zero()) g2_zero = false;

  // The unit-jump leader route also covers jump-free models, where the jump
  // measure never enters the coefficients.
  rep.case1_eligible = (j.kind == JumpSpec::Kind::UnitJump) || model.jump_free();
  rep.case2_eligible = g2_zero;
  if (!rep.case1_eligible && !rep.case2_eligible)
    rep.notes.push_back(
        "Case II ineligible; Case I ineligible: follower solvable, leader not");

  rep.convexity_sufficient = psd_samples(costs.Q1, opts.psd_slack) &&
                             psd_samples(costs.R1, opts.psd_slack) &&
                             min_eig(costs.M1) >= -opts.psd_slack &&
                             pd_samples(costs.R2, opts.psd_slack);
  return rep;
}

ModelSpec strip_jumps(const ModelSpec& model) {
  ModelSpec out = model;
  for (auto& c : out.F) c = Coeff::zero(model.n, model.n);
  for (auto& c : out.G1) c = Coeff::zero(model.n, model.m1);
  for (auto& c : out.G2) c = Coeff::zero(model.n, model.m2);
  return out;
}

ModelSpec refine(const ModelSpec& model, int factor) {
  ModelSpec out = model;
  const TimeGrid& g = model.grid;
  out.A = model.A.refined(g, factor);
  out.C = model.C.refined(g, factor);
  out.B1 = model.B1.refined(g, factor);
  out.D1 = model.D1.refined(g, factor);
  out.B2 = model.B2.refined(g, factor);
  out.D2 = model.D2.refined(g, factor);
  for (auto& c : out.F) c = c.refined(g, factor);
  for (auto& c : out.G1) c = c.refined(g, factor);
  for (auto& c : out.G2) c = c.refined(g, factor);
  out.grid = TimeGrid{g.t0, g.T, g.steps * factor};
  return out;
}

CostSpec refine(const CostSpec& costs, const TimeGrid& grid, int factor) {
  CostSpec out = costs;
  out.Q1 = costs.Q1.refined(grid, factor);
  out.Q2 = costs.Q2.refined(grid, factor);
  out.R1 = costs.R1.refined(grid, factor);
  out.R2 = costs.R2.refined(grid, factor);
  return out;
}

bool follower_standard_condition(const ModelSpec& model, const CostSpec& costs,
                                 double slack) {
  (void)model;
  return psd_samples(costs.Q2, slack) && min_eig(costs.M2) >= -slack &&
         pd_samples(costs.R2, slack);
}

}  // namespace stackjd
