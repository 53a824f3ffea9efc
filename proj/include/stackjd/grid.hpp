#pragma once

#include <Eigen/Dense>
#include <cassert>
#include <utility>
#include <vector>

namespace stackjd {

// Uniform time grid on [t0, T].
struct TimeGrid {
  double t0 = 0.0;
  double T = 1.0;
  int steps = 1;

  double dt() const { return (T - t0) / steps; }
  int node_count() const { return steps + 1; }
  // node(steps) == T exactly
  double node(int i) const { return t0 + (T - t0) * (static_cast<double>(i) / steps); }
  bool valid() const { return t0 < T && steps >= 1; }

  // Subinterval index containing s, clamped to [0, steps-1].
  int interval_index(double s) const {
    double u = (s - t0) / dt();
    int i = static_cast<int>(u);
    if (i < 0) i = 0;
    if (i > steps - 1) i = steps - 1;
    return i;
  }

  bool operator==(const TimeGrid& o) const {
    return t0 == o.t0 && T == o.T && steps == o.steps;
  }
};

// Matrix-valued function carried by its node samples; linear between nodes.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(TimeGrid grid, std::vector<Eigen::MatrixXd> values)
      : grid_(grid), values_(std::move(values)) {
    assert(static_cast<int>(values_.size()) == grid_.node_count());
  }

  static GridFunction constant(const TimeGrid& grid, const Eigen::MatrixXd& value) {
    return GridFunction(grid, std::vector<Eigen::MatrixXd>(grid.node_count(), value));
  }

  const TimeGrid& grid() const { return grid_; }
  int size() const { return static_cast<int>(values_.size()); }
  const Eigen::MatrixXd& at(int i) const { return values_[i]; }
  Eigen::MatrixXd& at(int i) { return values_[i]; }

  // Linear interpolation, clamped to [t0, T].
  Eigen::MatrixXd eval(double s) const {
    int i = grid_.interval_index(s);
    double si = grid_.node(i);
    double w = (s - si) / grid_.dt();
    if (w <= 0.0) return values_[i];
    if (w >= 1.0) return values_[i + 1];
    return (1.0 - w) * values_[i] + w * values_[i + 1];
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
  }

 private:
  TimeGrid grid_;
  std::vector<Eigen::MatrixXd> values_;
};

// Coefficient of the dynamics or costs: a constant matrix or one sample per
// grid node (piecewise linear in time between nodes).
class Coeff {
 public:
  Coeff() = default;
  explicit Coeff(Eigen::MatrixXd constant) { samples_.push_back(std::move(constant)); }
  explicit Coeff(std::vector<Eigen::MatrixXd> node_samples) : samples_(std::move(node_samples)) {}

  static Coeff scalar(double x) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = x;
    return Coeff(m);
  }
  static Coeff zero(int rows, int cols) { return Coeff(Eigen::MatrixXd::Zero(rows, cols)); }

  bool is_constant() const { return samples_.size() == 1; }
  int sample_count() const { return static_cast<int>(samples_.size()); }
  const std::vector<Eigen::MatrixXd>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

  Eigen::Index rows() const { return samples_.empty() ? 0 : samples_[0].rows(); }
  Eigen::Index cols() const { return samples_.empty() ? 0 : samples_[0].cols(); }

  const Eigen::MatrixXd& at_node(int i) const {
    return is_constant() ? samples_[0] : samples_[static_cast<size_t>(i)];
  }

  Eigen::MatrixXd eval(const TimeGrid& grid, double s) const {
    if (is_constant()) return samples_[0];
    int i = grid.interval_index(s);
    double w = (s - grid.node(i)) / grid.dt();
    if (w <= 0.0) return samples_[i];
    if (w >= 1.0) return samples_[i + 1];
    return (1.0 - w) * samples_[i] + w * samples_[i + 1];
  }

  bool is_zero() const {
    for (const auto& m : samples_)
      if (m.cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
  }

  bool all_finite() const {
    for (const auto& m : samples_)
      if (!m.allFinite()) return false;
    return true;
  }

  // Resample onto a grid refined by an integer factor. Node samples are
  // piecewise linear by definition, so refinement is exact.
  Coeff refined(const TimeGrid& grid, int factor) const {
    if (is_constant()) return *this;
    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<size_t>(grid.steps * factor + 1));
    TimeGrid fine{grid.t0, grid.T, grid.steps * factor};
    for (int i = 0; i <= fine.steps; ++i) out.push_back(eval(grid, fine.node(i)));
    return Coeff(std::move(out));
  }

 private:
  std::vector<Eigen::MatrixXd> samples_;
};

}  // namespace stackjd
