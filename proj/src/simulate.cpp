#include "stackjd/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "stackjd/errors.hpp"
#include "stackjd/integrators.hpp"
#include "stackjd/rng.hpp"

namespace stackjd::simulate {

namespace {

void check_state(const Eigen::VectorXd& x, double s) {
  if (!x.allFinite())
    throw SolverError(SolverFault::PathDiverged, s, "non-finite simulated state");
}

// Deterministic tree reduction (Neumaier compensated sum).
double stable_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

Estimate reduce(const std::vector<double>& values, std::uint64_t base_seed) {
  Estimate est;
  est.count = static_cast<int>(values.size());
  est.seed = base_seed;
  est.mean = stable_sum(values) / est.count;
  std::vector<double> sq(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    double d = values[i] - est.mean;
    sq[i] = d * d;
  }
  double var = est.count > 1 ? stable_sum(sq) / (est.count - 1) : 0.0;
  est.se = std::sqrt(var / est.count);
  return est;
}

}  // namespace

Path sample_closed_loop_path(const ModelSpec& model, const leader::Solution& lsol,
                             const equilibrium::FeedbackPair& pair, const Eigen::VectorXd& a,
                             std::uint64_t seed) {
  const TimeGrid& grid = model.grid;
  const int K = model.jumps.mark_count();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  Rng rng(seed);

  Path path;
  path.grid = grid;
  path.X.resize(grid.node_count());
  path.u1.resize(grid.steps);
  path.u2.resize(grid.steps);
  path.dB.resize(grid.steps);
  path.dN.assign(grid.steps, std::vector<long>(K, 0));

  Eigen::VectorXd X = Eigen::VectorXd::Zero(2 * model.n);
  X.head(model.n) = a;
  path.X[0] = X;

  for (int i = 0; i < grid.steps; ++i) {
    const leader::NodeGain& node = lsol.nodes[i];
    path.u1[i] = -pair.K1[i] * X;
    path.u2[i] = -pair.K2[i] * X;

    double dB = rng.normal() * sqrt_dt;
    path.dB[i] = dB;
    Eigen::VectorXd next = X + dt * (node.Acl * X) + dB * (node.Ccl * X);
    for (int k = 0; k < K; ++k) {
      double w = model.jumps.weight(k);
      long cnt = rng.poisson(w * dt);
      path.dN[i][k] = cnt;
      next += (static_cast<double>(cnt) - w * dt) * (node.Fcl[k] * X);
    }
    check_state(next, grid.node(i + 1));
    X = std::move(next);
    path.X[i + 1] = X;
  }
  return path;
}

CoeffTables build_tables(const ModelSpec& model, const CostSpec& costs) {
  CoeffTables t;
  t.model_at.reserve(model.grid.node_count());
  t.cost_at.reserve(model.grid.node_count());
  for (int i = 0; i < model.grid.node_count(); ++i) {
    double s = model.grid.node(i);
    t.model_at.push_back(model.at(s));
    t.cost_at.push_back(costs.at(model.grid, s));
  }
  return t;
}

Path sample_follower_perturbed_path(const ModelSpec& model, const CoeffTables& tables,
                                    const follower::Solution& fsol,
                                    const std::vector<Eigen::VectorXd>& u1,
                                    const GridFunction& phi,
                                    const std::vector<Eigen::VectorXd>& v, double eps,
                                    const Eigen::VectorXd& a, std::uint64_t seed) {
  const TimeGrid& grid = model.grid;
  const int K = model.jumps.mark_count();
  const double dt = grid.dt();
  const double sqrt_dt = std::sqrt(dt);
  Rng rng(seed);

  Path path;
  path.grid = grid;
  path.X.resize(grid.node_count());
  path.u1.resize(grid.steps);
  path.u2.resize(grid.steps);
  path.dB.resize(grid.steps);
  path.dN.assign(grid.steps, std::vector<long>(K, 0));

  Eigen::VectorXd x = a;
  path.X[0] = x;

  for (int i = 0; i < grid.steps; ++i) {
    const ModelAt& m = tables.model_at[i];
    const follower::Gains& g = fsol.gains[i];

    // Feedback law with zero martingale offsets plus the probe direction.
    Eigen::VectorXd f = m.B2.transpose() * phi.at(i).col(0) + g.Shat1 * u1[i];
    Eigen::VectorXd u2 =
        -g.Rhat2_inv * (g.Shat2.transpose() * x) - g.Rhat2_inv * f + eps * v[i];
    path.u1[i] = u1[i];
    path.u2[i] = u2;

    double dB = rng.normal() * sqrt_dt;
    path.dB[i] = dB;
    Eigen::VectorXd next = x + dt * (m.A * x + m.B1 * u1[i] + m.B2 * u2) +
                           dB * (m.C * x + m.D1 * u1[i] + m.D2 * u2);
    for (int k = 0; k < K; ++k) {
      double w = model.jumps.weight(k);
      long cnt = rng.poisson(w * dt);
      path.dN[i][k] = cnt;
      next += (static_cast<double>(cnt) - w * dt) *
              (m.F[k] * x + m.G1[k] * u1[i] + m.G2[k] * u2);
    }
    check_state(next, grid.node(i + 1));
    x = std::move(next);
    path.X[i + 1] = x;
  }
  return path;
}

Path sample_follower_perturbed_path(const ModelSpec& model, const CostSpec& costs,
                                    const follower::Solution& fsol,
                                    const std::vector<Eigen::VectorXd>& u1,
                                    const GridFunction& phi,
                                    const std::vector<Eigen::VectorXd>& v, double eps,
                                    const Eigen::VectorXd& a, std::uint64_t seed) {
  return sample_follower_perturbed_path(model, build_tables(model, costs), fsol, u1, phi, v,
                                        eps, a, seed);
}

std::pair<double, double> accumulate_costs(const Path& path, const ModelSpec& model,
                                           const CostSpec& costs, const CoeffTables& tables) {
  const TimeGrid& grid = path.grid;
  const double dt = grid.dt();
  const int n = model.n;

  double J1 = 0.0, J2 = 0.0;
  for (int i = 0; i < grid.steps; ++i) {
    const CostAt& c = tables.cost_at[i];
    auto x = path.X[i].head(n);
    J1 += dt * (x.dot(c.Q1 * x) + path.u1[i].dot(c.R1 * path.u1[i]));
    J2 += dt * (x.dot(c.Q2 * x) + path.u2[i].dot(c.R2 * path.u2[i]));
  }
  auto xT = path.X[grid.steps].head(n);
  J1 += xT.dot(costs.M1 * xT);
  J2 += xT.dot(costs.M2 * xT);
  return {J1, J2};
}

std::pair<double, double> accumulate_costs(const Path& path, const ModelSpec& model,
                                           const CostSpec& costs) {
  return accumulate_costs(path, model, costs, build_tables(model, costs));
}

Estimate monte_carlo(const std::function<double(std::uint64_t)>& sampler, int count,
                     std::uint64_t base_seed, int threads) {
  std::vector<double> values(static_cast<size_t>(count));

  if (threads <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    threads = std::clamp<int>(static_cast<int>(hc), 1, 8);
  }
  threads = std::min<int>(threads, count);

  auto worker = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      values[static_cast<size_t>(i)] = sampler(derive_seed(base_seed, static_cast<std::uint64_t>(i)));
  };

  if (threads <= 1) {
    worker(0, count);
  } else {
    std::vector<std::thread> pool;
    int block = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int lo = t * block;
      int hi = std::min(count, lo + block);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  return reduce(values, base_seed);
}

EnsembleResult run_ensemble(const ModelSpec& model, const CostSpec& costs,
                            const leader::Solution& lsol,
                            const equilibrium::FeedbackPair& pair, int count,
                            std::uint64_t base_seed, int threads) {
  EnsembleResult out;
  out.J1.resize(static_cast<size_t>(count));
  out.J2.resize(static_cast<size_t>(count));
  out.jumps.resize(static_cast<size_t>(count));

  if (threads <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    threads = std::clamp<int>(static_cast<int>(hc), 1, 8);
  }
  threads = std::min<int>(threads, count);

  CoeffTables tables = build_tables(model, costs);
  auto worker = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      Path p = sample_closed_loop_path(model, lsol, pair, model.a,
                                       derive_seed(base_seed, static_cast<std::uint64_t>(i)));
      auto [J1, J2] = accumulate_costs(p, model, costs, tables);
      out.J1[static_cast<size_t>(i)] = J1;
      out.J2[static_cast<size_t>(i)] = J2;
      out.jumps[static_cast<size_t>(i)] = p.total_jumps();
    }
  };

  if (threads <= 1) {
    worker(0, count);
  } else {
    std::vector<std::thread> pool;
    int block = (count + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int lo = t * block;
      int hi = std::min(count, lo + block);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  out.estJ1 = reduce(out.J1, base_seed);
  out.estJ2 = reduce(out.J2, base_seed);
  return out;
}

GridFunction second_moment(const ModelSpec& model, const leader::Solution& lsol,
                           const Eigen::VectorXd& a) {
  const TimeGrid& grid = model.grid;
  const int K = model.jumps.mark_count();

  // Linear interpolation of the closed-loop tables.
  auto blend = [&](double s, auto&& pick) {
    int i = grid.interval_index(s);
    double w = (s - grid.node(i)) / grid.dt();
    if (w <= 0.0) return pick(i);
    if (w >= 1.0) return pick(i + 1);
    return Eigen::MatrixXd((1.0 - w) * pick(i) + w * pick(i + 1));
  };

  MatrixField rhs = [&](double s, const Eigen::MatrixXd& Sigma) -> Eigen::MatrixXd {
    Eigen::MatrixXd A = blend(s, [&](int i) { return lsol.nodes[i].Acl; });
    Eigen::MatrixXd C = blend(s, [&](int i) { return lsol.nodes[i].Ccl; });
    Eigen::MatrixXd out = A * Sigma + Sigma * A.transpose() + C * Sigma * C.transpose();
    for (int k = 0; k < K; ++k) {
      Eigen::MatrixXd F = blend(s, [&](int i) { return lsol.nodes[i].Fcl[k]; });
      out += model.jumps.weight(k) * F * Sigma * F.transpose();
    }
    return out;
  };

  Eigen::VectorXd X0 = Eigen::VectorXd::Zero(2 * model.n);
  X0.head(model.n) = a;
  return integrate_forward(rhs, X0 * X0.transpose(), grid);
}

std::pair<double, double> expected_costs(const ModelSpec& model, const CostSpec& costs,
                                         const leader::Solution& lsol,
                                         const equilibrium::FeedbackPair& pair,
                                         const GridFunction& Sigma) {
  (void)lsol;
  const TimeGrid& grid = model.grid;
  const int n = model.n;
  const int N = grid.node_count();

  std::vector<double> f1(N), f2(N);
  for (int i = 0; i < N; ++i) {
    CostAt c = costs.at(grid, grid.node(i));
    Eigen::MatrixXd Q1big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Q1big.topLeftCorner(n, n) = c.Q1;
    Eigen::MatrixXd Q2big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Q2big.topLeftCorner(n, n) = c.Q2;
    Eigen::MatrixXd W1 = Q1big + pair.K1[i].transpose() * c.R1 * pair.K1[i];
    Eigen::MatrixXd W2 = Q2big + pair.K2[i].transpose() * c.R2 * pair.K2[i];
    f1[i] = (W1 * Sigma.at(i)).trace();
    f2[i] = (W2 * Sigma.at(i)).trace();
  }

  double J1 = 0.0, J2 = 0.0;
  for (int i = 0; i < N - 1; ++i) {
    J1 += 0.5 * (f1[i] + f1[i + 1]);
    J2 += 0.5 * (f2[i] + f2[i + 1]);
  }
  J1 *= grid.dt();
  J2 *= grid.dt();

  const Eigen::MatrixXd& ST = Sigma.at(N - 1);
  J1 += (costs.M1 * ST.topLeftCorner(n, n)).trace();
  J2 += (costs.M2 * ST.topLeftCorner(n, n)).trace();
  return {J1, J2};
}

}  // namespace stackjd::simulate
