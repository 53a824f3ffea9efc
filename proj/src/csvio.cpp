#include "stackjd/csvio.hpp"

#include <cstdio>
#include <fstream>

#include "stackjd/errors.hpp"

namespace stackjd::csvio {

namespace {

std::ofstream open(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path, "cannot open for writing");
  return f;
}

void matrix_header(std::ofstream& f, const std::string& name, Eigen::Index rows,
                   Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      f << "," << name << "_" << r << "_" << c;
}

void matrix_row(std::ofstream& f, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) f << "," << fmt(m(r, c));
}

}  // namespace

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_follower_csv(const std::string& path, const ModelSpec& model,
                        const follower::Solution& sol) {
  auto f = open(path);
  const int n = model.n, m1 = model.m1, m2 = model.m2;
  f << "s";
  matrix_header(f, "P", n, n);
  matrix_header(f, "Rhat2", m2, m2);
  matrix_header(f, "Shat2", n, m2);
  matrix_header(f, "Shat1", m2, m1);
  f << "\n";
  for (int i = 0; i < model.grid.node_count(); ++i) {
    f << fmt(model.grid.node(i));
    matrix_row(f, sol.P.at(i));
    matrix_row(f, sol.gains[i].Rhat2);
    matrix_row(f, sol.gains[i].Shat2);
    matrix_row(f, sol.gains[i].Shat1);
    f << "\n";
  }
}

void write_leader_csv(const std::string& path, const ModelSpec& model,
                      const leader::Solution& sol) {
  auto f = open(path);
  const int d = 2 * model.n, m1 = model.m1;
  f << "s,case";
  matrix_header(f, "Pcal", d, d);
  f << ",rcond_A11,rcond_A22,rcond_S1,rcond_S2,rcond_R,schur_verified";
  matrix_header(f, "Rgain", m1, m1);
  matrix_header(f, "Hgain", m1, d);
  f << "\n";
  for (int i = 0; i < model.grid.node_count(); ++i) {
    f << fmt(model.grid.node(i)) << ","
      << (sol.which == leader::Case::One ? "case1" : "case2");
    matrix_row(f, sol.Pcal.at(i));
    if (sol.which == leader::Case::One) {
      const auto& g = sol.case1[i];
      f << "," << fmt(g.rcond_A11) << "," << fmt(g.rcond_A22) << "," << fmt(g.rcond_S1)
        << "," << fmt(g.rcond_S2) << "," << fmt(g.rcond_R) << ","
        << (g.schur_verified ? 1 : 0);
      matrix_row(f, g.R1eff);
      matrix_row(f, g.H1eff);
    } else {
      const auto& g = sol.case2[i];
      f << "," << fmt(g.rcond_S) << ",nan,nan,nan," << fmt(g.rcond_R) << ",0";
      matrix_row(f, g.Rhat1);
      matrix_row(f, g.Bhat1);
    }
    f << "\n";
  }
}

void write_gains_csv(const std::string& path, const equilibrium::FeedbackPair& pair) {
  auto f = open(path);
  const auto m1 = pair.K1[0].rows(), m2 = pair.K2[0].rows(), d = pair.K1[0].cols();
  f << "s";
  matrix_header(f, "K1", m1, d);
  matrix_header(f, "K2", m2, d);
  f << "\n";
  for (int i = 0; i < pair.grid.node_count(); ++i) {
    f << fmt(pair.grid.node(i));
    matrix_row(f, pair.K1[i]);
    matrix_row(f, pair.K2[i]);
    f << "\n";
  }
}

void write_ensemble_csv(const std::string& path, const std::vector<EnsembleRow>& rows) {
  auto f = open(path);
  f << "path,J1,J2,jumps\n";
  for (const auto& r : rows)
    f << r.id << "," << fmt(r.J1) << "," << fmt(r.J2) << "," << r.jumps << "\n";
}

void write_paths_csv(const std::string& path, const std::vector<simulate::Path>& paths) {
  auto f = open(path);
  f << "path,node,s";
  if (!paths.empty()) {
    matrix_header(f, "X", paths[0].X[0].size(), 1);
    matrix_header(f, "u1", paths[0].u1.empty() ? 0 : paths[0].u1[0].size(), 1);
    matrix_header(f, "u2", paths[0].u2.empty() ? 0 : paths[0].u2[0].size(), 1);
  }
  f << "\n";
  for (size_t p = 0; p < paths.size(); ++p) {
    const auto& path_p = paths[p];
    for (int i = 0; i < path_p.grid.node_count(); ++i) {
      f << p << "," << i << "," << fmt(path_p.grid.node(i));
      matrix_row(f, path_p.X[i]);
      int j = std::min(i, path_p.grid.steps - 1);  // controls use start-of-step values
      matrix_row(f, path_p.u1[j]);
      matrix_row(f, path_p.u2[j]);
      f << "\n";
    }
  }
}

void write_report_csv(const std::string& path,
                      const std::vector<verify::TestReport>& reports) {
  auto f = open(path);
  f << "name,status,statistic,band,se,dt,tolerance,seed,detail\n";
  for (const auto& r : reports) {
    const char* status = r.status == verify::TestReport::Status::Pass   ? "pass"
                         : r.status == verify::TestReport::Status::Fail ? "fail"
                                                                        : "skip";
    f << r.name << "," << status << "," << fmt(r.statistic) << "," << fmt(r.band) << ","
      << fmt(r.se) << "," << fmt(r.dt) << "," << fmt(r.tolerance) << "," << r.seed << ","
      << "\"" << r.detail << "\"\n";
  }
}

}  // namespace stackjd::csvio
