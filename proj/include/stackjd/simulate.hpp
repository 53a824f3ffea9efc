#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "stackjd/equilibrium.hpp"
#include "stackjd/leader.hpp"

namespace stackjd::simulate {

// One Euler path on the shared grid. Controls and increments use the
// start-of-step (predictable) convention; jump contributions are compensated
// per mark. The stored increments reproduce the stored states exactly.
struct Path {
  TimeGrid grid;
  std::vector<Eigen::VectorXd> X;         // per node
  std::vector<Eigen::VectorXd> u1, u2;    // per step
  std::vector<double> dB;                 // per step, Brownian increment
  std::vector<std::vector<long>> dN;      // per step, jump count per mark

  long total_jumps() const {
    long t = 0;
    for (const auto& row : dN)
      for (long c : row) t += c;
    return t;
  }
};

// Node-indexed coefficient snapshots; sampling many paths against one model
// reuses these instead of re-evaluating the coefficients every step.
struct CoeffTables {
  std::vector<ModelAt> model_at;  // per node
  std::vector<CostAt> cost_at;    // per node
};
CoeffTables build_tables(const ModelSpec& model, const CostSpec& costs);

// Closed-loop doubled-state dynamics under the synthesized feedback pair.
Path sample_closed_loop_path(const ModelSpec& model, const leader::Solution& lsol,
                             const equilibrium::FeedbackPair& pair, const Eigen::VectorXd& a,
                             std::uint64_t seed);

// Original n-dimensional dynamics with a deterministic leader control and the
// follower feedback law perturbed by eps * v.
Path sample_follower_perturbed_path(const ModelSpec& model, const CostSpec& costs,
                                    const follower::Solution& fsol,
                                    const std::vector<Eigen::VectorXd>& u1,
                                    const GridFunction& phi,
                                    const std::vector<Eigen::VectorXd>& v, double eps,
                                    const Eigen::VectorXd& a, std::uint64_t seed);
Path sample_follower_perturbed_path(const ModelSpec& model, const CoeffTables& tables,
                                    const follower::Solution& fsol,
                                    const std::vector<Eigen::VectorXd>& u1,
                                    const GridFunction& phi,
                                    const std::vector<Eigen::VectorXd>& v, double eps,
                                    const Eigen::VectorXd& a, std::uint64_t seed);

// Left-rectangle quadrature of the running costs plus terminal weights;
// x is the first n components of the stored state.
std::pair<double, double> accumulate_costs(const Path& path, const ModelSpec& model,
                                           const CostSpec& costs);
std::pair<double, double> accumulate_costs(const Path& path, const ModelSpec& model,
                                           const CostSpec& costs, const CoeffTables& tables);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
  std::uint64_t seed = 0;
};

// Mean and standard error of sampler(derive_seed(base_seed, i)) over
// i = 0..count-1. Path values are stored per index and reduced sequentially,
// so the estimate is bit-identical for any worker count.
Estimate monte_carlo(const std::function<double(std::uint64_t)>& sampler, int count,
                     std::uint64_t base_seed, int threads = 0);

struct EnsembleResult {
  std::vector<double> J1, J2;  // per path, indexed by path id
  std::vector<long> jumps;
  Estimate estJ1, estJ2;
};

// Closed-loop ensemble with per-path cost records. Path i is a pure function
// of (base_seed, i); the worker count affects only wall time.
EnsembleResult run_ensemble(const ModelSpec& model, const CostSpec& costs,
                            const leader::Solution& lsol,
                            const equilibrium::FeedbackPair& pair, int count,
                            std::uint64_t base_seed, int threads = 0);

// Second moment E[X X'] of the closed loop, by forward integration.
GridFunction second_moment(const ModelSpec& model, const leader::Solution& lsol,
                           const Eigen::VectorXd& a);

// Expected (J1, J2) along the closed loop from the second moment
// (trapezoidal in time). A deterministic counterpart of the Monte Carlo run.
std::pair<double, double> expected_costs(const ModelSpec& model, const CostSpec& costs,
                                         const leader::Solution& lsol,
                                         const equilibrium::FeedbackPair& pair,
                                         const GridFunction& Sigma);

}  // namespace stackjd::simulate
