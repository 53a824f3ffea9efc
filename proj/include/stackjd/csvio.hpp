#pragma once

#include <string>
#include <vector>

#include "stackjd/equilibrium.hpp"
#include "stackjd/follower.hpp"
#include "stackjd/leader.hpp"
#include "stackjd/simulate.hpp"
#include "stackjd/verify.hpp"

namespace stackjd::csvio {

// Shortest round-trippable decimal formatting; output bytes are stable across
// runs and worker counts.
std::string fmt(double x);

void write_follower_csv(const std::string& path, const ModelSpec& model,
                        const follower::Solution& sol);

void write_leader_csv(const std::string& path, const ModelSpec& model,
                      const leader::Solution& sol);

void write_gains_csv(const std::string& path, const equilibrium::FeedbackPair& pair);

struct EnsembleRow {
  int id = 0;
  double J1 = 0.0, J2 = 0.0;
  long jumps = 0;
};
void write_ensemble_csv(const std::string& path, const std::vector<EnsembleRow>& rows);

void write_paths_csv(const std::string& path, const std::vector<simulate::Path>& paths);

void write_report_csv(const std::string& path, const std::vector<verify::TestReport>& reports);

}  // namespace stackjd::csvio
