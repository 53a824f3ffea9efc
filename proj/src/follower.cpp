#include "stackjd/follower.hpp"

#include <Eigen/SVD>

#include "stackjd/errors.hpp"
#include "stackjd/integrators.hpp"

namespace stackjd::follower {

namespace {

double rcond_estimate(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (smax <= 0.0) return 0.0;
  return smin / smax;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::VectorXd interp_path(const std::vector<Eigen::VectorXd>& path, const TimeGrid& grid,
                            double s) {
  int i = grid.interval_index(s);
  double w = (s - grid.node(i)) / grid.dt();
  if (w <= 0.0) return path[i];
  if (w >= 1.0) return path[i + 1];
  return (1.0 - w) * path[i] + w * path[i + 1];
}

}  // namespace

Gains gains_at(const Eigen::MatrixXd& P, const ModelSpec& model, const CostSpec& costs,
               double s, double cond_cap) {
  ModelAt m = model.at(s);
  CostAt c = costs.at(model.grid, s);
  const int K = model.jumps.mark_count();

  Gains g;
  g.Rhat2 = c.R2 + m.D2.transpose() * P * m.D2;
  Eigen::MatrixXd S2t = m.B2.transpose() * P + m.D2.transpose() * P * m.C;  // m2 x n
  g.Shat1 = m.D2.transpose() * P * m.D1;
  for (int k = 0; k < K; ++k) {
    double w = model.jumps.weight(k);
    g.Rhat2 += w * m.G2[k].transpose() * P * m.G2[k];
    S2t += w * m.G2[k].transpose() * P * m.F[k];
    g.Shat1 += w * m.G2[k].transpose() * P * m.G1[k];
  }
  g.Shat2 = S2t.transpose();

  g.rcond = rcond_estimate(g.Rhat2);
  if (!(g.rcond > 1.0 / cond_cap))
    throw SolverError(SolverFault::SingularGain, s, "Rhat2 condition cap exceeded");
  g.Rhat2_inv = g.Rhat2.fullPivLu().inverse();
  return g;
}

HatCoefficients hats_at(const Eigen::MatrixXd& P, const Gains& g, const ModelSpec& model,
                        double s) {
  ModelAt m = model.at(s);
  const int K = model.jumps.mark_count();
  const Eigen::MatrixXd& Ri = g.Rhat2_inv;
  Eigen::MatrixXd S2t = g.Shat2.transpose();  // m2 x n

  HatCoefficients h;
  h.Ahat = m.A - m.B2 * Ri * S2t;
  h.Bhat2 = -m.B2 * Ri * m.B2.transpose();
  h.Hhat2 = -m.B2 * Ri * m.D2.transpose();
  h.Bhat1 = m.B1 - m.B2 * Ri * g.Shat1;
  h.Chat = m.C - m.D2 * Ri * S2t;
  h.Htilde2 = -m.D2 * Ri * m.D2.transpose();
  h.Dhat1 = m.D1 - m.D2 * Ri * g.Shat1;
  h.Hhat1 = (m.C.transpose() * P * m.D1 + P * m.B1 - g.Shat2 * Ri * g.Shat1).transpose();

  h.Khat2.resize(K);
  h.Ktilde2.resize(K);
  h.Fhat.resize(K);
  h.Ghat1.resize(K);
  h.Khat1.resize(K);
  h.Kbar2.assign(K, std::vector<Eigen::MatrixXd>(K));
  for (int k = 0; k < K; ++k) {
    h.Khat2[k] = -m.B2 * Ri * m.G2[k].transpose();
    h.Ktilde2[k] = -m.D2 * Ri * m.G2[k].transpose();
    h.Fhat[k] = m.F[k] - m.G2[k] * Ri * S2t;
    h.Ghat1[k] = m.G1[k] - m.G2[k] * Ri * g.Shat1;
    h.Khat1[k] = (m.F[k].transpose() * P * m.G1[k]).transpose();
    for (int l = 0; l < K; ++l) h.Kbar2[k][l] = -m.G2[k] * Ri * m.G2[l].transpose();
  }
  return h;
}

std::function<Eigen::MatrixXd(double, const Eigen::MatrixXd&)> riccati_rhs_field(
    const ModelSpec& model, const CostSpec& costs, double cond_cap) {
  return [&model, &costs, cond_cap](double s, const Eigen::MatrixXd& P) -> Eigen::MatrixXd {
    ModelAt m = model.at(s);
    CostAt c = costs.at(model.grid, s);
    Gains g = gains_at(P, model, costs, s, cond_cap);
    Eigen::MatrixXd drift = m.A.transpose() * P + P * m.A + c.Q2 +
                            m.C.transpose() * P * m.C -
                            g.Shat2 * g.Rhat2_inv * g.Shat2.transpose();
    for (int k = 0; k < model.jumps.mark_count(); ++k)
      drift += model.jumps.weight(k) * m.F[k].transpose() * P * m.F[k];
    return -drift;
  };
}

Solution solve(const ModelSpec& model, const CostSpec& costs, double cond_cap) {
  const TimeGrid& grid = model.grid;

  MatrixField rhs = riccati_rhs_field(model, costs, cond_cap);

  Solution sol;
  sol.cond_cap = cond_cap;
  sol.P = integrate_backward(rhs, costs.M2, grid, symmetrize);
  sol.gains.reserve(grid.node_count());
  sol.hats.reserve(grid.node_count());
  for (int i = 0; i < grid.node_count(); ++i) {
    double s = grid.node(i);
    sol.gains.push_back(gains_at(sol.P.at(i), model, costs, s, cond_cap));
    sol.hats.push_back(hats_at(sol.P.at(i), sol.gains.back(), model, s));
  }
  return sol;
}

FeedbackMultipliers feedback_gain(const Solution& sol, const ModelSpec& model,
                                  const CostSpec& costs, double s) {
  Eigen::MatrixXd P = sol.P.eval(s);
  Gains g = gains_at(P, model, costs, s, sol.cond_cap);
  ModelAt m = model.at(s);
  const int K = model.jumps.mark_count();

  FeedbackMultipliers fm;
  fm.Kx = -g.Rhat2_inv * g.Shat2.transpose();
  fm.Kf_B2 = g.Rhat2_inv * m.B2.transpose();
  fm.Kf_D2 = g.Rhat2_inv * m.D2.transpose();
  fm.Kf_G2.reserve(K);
  for (int k = 0; k < K; ++k) fm.Kf_G2.push_back(g.Rhat2_inv * m.G2[k].transpose());
  fm.Kf_S1 = g.Rhat2_inv * g.Shat1;
  return fm;
}

GridFunction solve_phi(const ModelSpec& model, const CostSpec& costs, const Solution& sol,
                       const std::vector<Eigen::VectorXd>& u1) {
  const TimeGrid& grid = model.grid;
  const int K = model.jumps.mark_count();

  MatrixField rhs = [&](double s, const Eigen::MatrixXd& phi) -> Eigen::MatrixXd {
    Eigen::MatrixXd P = sol.P.eval(s);
    Gains g = gains_at(P, model, costs, s, sol.cond_cap);
    HatCoefficients h = hats_at(P, g, model, s);
    Eigen::VectorXd u = interp_path(u1, grid, s);
    Eigen::VectorXd drift = h.Ahat.transpose() * phi + h.Hhat1.transpose() * u;
    for (int k = 0; k < K; ++k)
      drift += model.jumps.weight(k) * h.Khat1[k].transpose() * u;
    return -drift;
  };

  return integrate_backward(rhs, Eigen::MatrixXd::Zero(model.n, 1), grid);
}

double cost_certificate(const ModelSpec& model, const CostSpec& costs, const Solution& sol,
                        const std::vector<Eigen::VectorXd>& u1, const GridFunction& phi,
                        const Eigen::VectorXd& a) {
  const TimeGrid& grid = model.grid;
  const int K = model.jumps.mark_count();
  const int N = grid.node_count();

  std::vector<double> integrand(N);
  for (int i = 0; i < N; ++i) {
    double s = grid.node(i);
    ModelAt m = model.at(s);
    const Eigen::MatrixXd& P = sol.P.at(i);
    const Gains& g = sol.gains[i];
    const Eigen::VectorXd& u = u1[i];
    Eigen::VectorXd ph = phi.at(i).col(0);

    double v = u.dot(m.D1.transpose() * P * m.D1 * u);
    for (int k = 0; k < K; ++k)
      v += model.jumps.weight(k) * u.dot(m.G1[k].transpose() * P * m.G1[k] * u);
    v += 2.0 * u.dot(m.B1.transpose() * ph);
    Eigen::VectorXd f = m.B2.transpose() * ph + g.Shat1 * u;
    v -= f.dot(g.Rhat2_inv * f);
    integrand[i] = v;
  }

  double quad = 0.0;
  for (int i = 0; i < N - 1; ++i) quad += 0.5 * (integrand[i] + integrand[i + 1]);
  quad *= grid.dt();

  Eigen::VectorXd phi0 = phi.at(0).col(0);
  return a.dot(sol.P.at(0) * a) + 2.0 * a.dot(phi0) + quad;
}

}  // namespace stackjd::follower
