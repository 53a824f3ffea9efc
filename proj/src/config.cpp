#include "stackjd/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>

#include "stackjd/errors.hpp"

namespace stackjd {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& path,
                    const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(path + "." + it.key(), "unknown key");
}

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

// A matrix is a plain number (1x1 only) or an array of rows.
Eigen::MatrixXd parse_matrix(const json& j, int rows, int cols, const std::string& path) {
  if (j.is_number()) {
    if (rows != 1 || cols != 1)
      throw ConfigError(path, "scalar given where a " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " matrix is required");
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = j.get<double>();
    return m;
  }
  if (!j.is_array() || j.size() != static_cast<size_t>(rows))
    throw ConfigError(path, "expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != static_cast<size_t>(cols))
      throw ConfigError(path + "[" + std::to_string(r) + "]",
                        "expected " + std::to_string(cols) + " columns");
    for (int c = 0; c < cols; ++c)
      m(r, c) = number_at(row[c], path + "[" + std::to_string(r) + "][" +
                                      std::to_string(c) + "]");
  }
  return m;
}

bool looks_like_matrix(const json& j, int rows, int cols) {
  if (j.is_number()) return rows == 1 && cols == 1;
  if (!j.is_array() || j.size() != static_cast<size_t>(rows)) return false;
  for (const auto& row : j)
    if (!row.is_array() || row.size() != static_cast<size_t>(cols)) return false;
  return true;
}

// A coefficient is a constant matrix or an array of steps+1 node matrices.
Coeff parse_coeff(const json& j, int rows, int cols, int steps, const std::string& path) {
  if (looks_like_matrix(j, rows, cols)) return Coeff(parse_matrix(j, rows, cols, path));
  if (j.is_array() && j.size() == static_cast<size_t>(steps + 1)) {
    std::vector<Eigen::MatrixXd> samples;
    samples.reserve(j.size());
    for (size_t i = 0; i < j.size(); ++i)
      samples.push_back(
          parse_matrix(j[i], rows, cols, path + "[" + std::to_string(i) + "]"));
    return Coeff(std::move(samples));
  }
  throw ConfigError(path, "expected a matrix or an array of steps+1 node matrices");
}

// Per-mark coefficient: an array with one coefficient per mark; with a single
// mark the wrapper may be omitted.
std::vector<Coeff> parse_mark_coeff(const json& j, int rows, int cols, int steps,
                                    int mark_count, const std::string& path) {
  std::vector<Coeff> out;
  if (mark_count == 1) {
    if (j.is_array() && j.size() == 1) {
      out.push_back(parse_coeff(j[0], rows, cols, steps, path + "[0]"));
      return out;
    }
    out.push_back(parse_coeff(j, rows, cols, steps, path));
    return out;
  }
  if (!j.is_array() || j.size() != static_cast<size_t>(mark_count))
    throw ConfigError(path, "expected one entry per mark (" + std::to_string(mark_count) + ")");
  for (int k = 0; k < mark_count; ++k)
    out.push_back(parse_coeff(j[k], rows, cols, steps, path + "[" + std::to_string(k) + "]"));
  return out;
}

int int_at(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  return j.get<int>();
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin, std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError(origin, "top level must be an object");
  reject_unknown(root, origin,
                 {"dimensions", "grid", "jumps", "dynamics", "costs", "initial_state",
                  "monte_carlo", "run"});

  RunConfig cfg;
  ModelSpec& model = cfg.model;
  CostSpec& costs = cfg.costs;

  if (!root.contains("dimensions")) throw ConfigError("dimensions", "missing");
  const json& dims = root["dimensions"];
  reject_unknown(dims, "dimensions", {"n", "m1", "m2"});
  model.n = dims.contains("n") ? int_at(dims["n"], "dimensions.n") : 1;
  model.m1 = dims.contains("m1") ? int_at(dims["m1"], "dimensions.m1") : 1;
  model.m2 = dims.contains("m2") ? int_at(dims["m2"], "dimensions.m2") : 1;
  if (model.n < 1 || model.m1 < 1 || model.m2 < 1)
    throw ConfigError("dimensions", "n, m1, m2 must be positive");

  if (!root.contains("grid")) throw ConfigError("grid", "missing");
  const json& grid = root["grid"];
  reject_unknown(grid, "grid", {"t0", "T", "steps"});
  model.grid.t0 = grid.contains("t0") ? number_at(grid["t0"], "grid.t0") : 0.0;
  if (!grid.contains("T")) throw ConfigError("grid.T", "missing");
  model.grid.T = number_at(grid["T"], "grid.T");
  if (!grid.contains("steps")) throw ConfigError("grid.steps", "missing");
  model.grid.steps = int_at(grid["steps"], "grid.steps");
  if (!model.grid.valid()) throw ConfigError("grid", "requires t0 < T and steps >= 1");

  if (root.contains("jumps")) {
    const json& jumps = root["jumps"];
    reject_unknown(jumps, "jumps", {"type", "intensity", "marks", "weights"});
    std::string type = jumps.contains("type") ? jumps["type"].get<std::string>() : "unit";
    if (type == "unit") {
      double lam = jumps.contains("intensity")
                       ? number_at(jumps["intensity"], "jumps.intensity")
                       : 1.0;
      model.jumps = JumpSpec::unit(lam);
    } else if (type == "marks") {
      if (!jumps.contains("marks")) throw ConfigError("jumps.marks", "missing");
      if (!jumps.contains("weights")) throw ConfigError("jumps.weights", "missing");
      std::vector<double> marks, weights;
      for (size_t i = 0; i < jumps["marks"].size(); ++i)
        marks.push_back(number_at(jumps["marks"][i], "jumps.marks"));
      for (size_t i = 0; i < jumps["weights"].size(); ++i)
        weights.push_back(number_at(jumps["weights"][i], "jumps.weights"));
      model.jumps = JumpSpec::finite(std::move(marks), std::move(weights));
    } else {
      throw ConfigError("jumps.type", "expected \"unit\" or \"marks\"");
    }
  } else {
    model.jumps = JumpSpec::unit(1.0);
  }

  const int n = model.n, m1 = model.m1, m2 = model.m2;
  const int steps = model.grid.steps;
  const int K = model.jumps.mark_count();

  json dynamics = root.contains("dynamics") ? root["dynamics"] : json::object();
  reject_unknown(dynamics, "dynamics", {"A", "B1", "B2", "C", "D1", "D2", "F", "G1", "G2"});
  auto coeff_or_zero = [&](const char* key, int r, int c) {
    if (!dynamics.contains(key)) return Coeff::zero(r, c);
    return parse_coeff(dynamics[key], r, c, steps, std::string("dynamics.") + key);
  };
  model.A = coeff_or_zero("A", n, n);
  model.C = coeff_or_zero("C", n, n);
  model.B1 = coeff_or_zero("B1", n, m1);
  model.D1 = coeff_or_zero("D1", n, m1);
  model.B2 = coeff_or_zero("B2", n, m2);
  model.D2 = coeff_or_zero("D2", n, m2);
  auto mark_or_zero = [&](const char* key, int r, int c) {
    if (!dynamics.contains(key)) return std::vector<Coeff>(K, Coeff::zero(r, c));
    return parse_mark_coeff(dynamics[key], r, c, steps, K, std::string("dynamics.") + key);
  };
  model.F = mark_or_zero("F", n, n);
  model.G1 = mark_or_zero("G1", n, m1);
  model.G2 = mark_or_zero("G2", n, m2);

  json cj = root.contains("costs") ? root["costs"] : json::object();
  reject_unknown(cj, "costs", {"Q1", "Q2", "R1", "R2", "M1", "M2"});
  auto cost_or_zero = [&](const char* key, int r, int c) {
    if (!cj.contains(key)) return Coeff::zero(r, c);
    return parse_coeff(cj[key], r, c, steps, std::string("costs.") + key);
  };
  costs.Q1 = cost_or_zero("Q1", n, n);
  costs.Q2 = cost_or_zero("Q2", n, n);
  costs.R1 = cost_or_zero("R1", m1, m1);
  costs.R2 = cost_or_zero("R2", m2, m2);
  costs.M1 = cj.contains("M1") ? parse_matrix(cj["M1"], n, n, "costs.M1")
                               : Eigen::MatrixXd::Zero(n, n);
  costs.M2 = cj.contains("M2") ? parse_matrix(cj["M2"], n, n, "costs.M2")
                               : Eigen::MatrixXd::Zero(n, n);

  if (root.contains("initial_state")) {
    const json& a = root["initial_state"];
    model.a = Eigen::VectorXd::Zero(n);
    if (a.is_number() && n == 1) {
      model.a(0) = a.get<double>();
    } else if (a.is_array() && a.size() == static_cast<size_t>(n)) {
      for (int i = 0; i < n; ++i)
        model.a(i) = number_at(a[i], "initial_state[" + std::to_string(i) + "]");
    } else {
      throw ConfigError("initial_state", "expected a list of " + std::to_string(n) + " numbers");
    }
  } else {
    model.a = Eigen::VectorXd::Zero(n);
  }

  if (root.contains("monte_carlo")) {
    const json& mc = root["monte_carlo"];
    reject_unknown(mc, "monte_carlo", {"paths", "seed"});
    if (mc.contains("paths")) cfg.paths = int_at(mc["paths"], "monte_carlo.paths");
    if (mc.contains("seed")) {
      if (!mc["seed"].is_number_integer())
        throw ConfigError("monte_carlo.seed", "expected an integer");
      cfg.seed = mc["seed"].get<std::uint64_t>();
    }
    if (cfg.paths < 2) throw ConfigError("monte_carlo.paths", "must be at least 2");
  }

  if (root.contains("run")) {
    const json& run = root["run"];
    reject_unknown(run, "run", {"case", "out", "condition_cap", "perturbation_eps"});
    if (run.contains("case")) {
      cfg.case_selection = run["case"].get<std::string>();
      if (cfg.case_selection != "auto" && cfg.case_selection != "case1" &&
          cfg.case_selection != "case2")
        throw ConfigError("run.case", "expected auto, case1, or case2");
    }
    if (run.contains("out")) cfg.out_dir = run["out"].get<std::string>();
    if (run.contains("condition_cap")) {
      cfg.condition_cap = number_at(run["condition_cap"], "run.condition_cap");
      if (!(cfg.condition_cap > 0.0))
        throw ConfigError("run.condition_cap", "must be positive");
    }
    if (run.contains("perturbation_eps")) {
      cfg.perturbation_eps = number_at(run["perturbation_eps"], "run.perturbation_eps");
      if (!(cfg.perturbation_eps > 0.0))
        throw ConfigError("run.perturbation_eps", "must be positive");
    }
  }

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

}  // namespace stackjd
