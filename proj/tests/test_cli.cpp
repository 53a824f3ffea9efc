#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = STACKJD_CLI_PATH;
const std::string kConfigDir = STACKJD_CONFIG_DIR;

int run(const std::string& cmd) {
  int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::path("cli_test_out") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_temp_config(const std::string& name, const std::string& text) {
  fs::path dir = fresh_dir("tmp_configs_" + name);
  fs::path file = dir / (name + ".json");
  std::ofstream out(file);
  out << text;
  return file;
}

}  // namespace

TEST_CASE("solve: reference config writes the three tables and exits 0") {
  fs::path dir = fresh_dir("solve");
  int code = run(kCli + " solve " + kConfigDir + "/reference_case1.json --out " + dir.string());
  CHECK(code == 0);
  CHECK(fs::exists(dir / "follower.csv"));
  CHECK(fs::exists(dir / "leader.csv"));
  CHECK(fs::exists(dir / "gains.csv"));
  std::string leader = slurp(dir / "leader.csv");
  CHECK(leader.find("case1") != std::string::npos);
}

TEST_CASE("solve: marked jumps with G2 != 0 exit 3") {
  fs::path cfg = write_temp_config("ineligible", R"({
    "dimensions": {"n": 1, "m1": 1, "m2": 1},
    "grid": {"T": 1.0, "steps": 10},
    "jumps": {"type": "marks", "marks": [-0.5, 1.0], "weights": [1.0, 0.5]},
    "dynamics": {"B2": 1.0, "G2": [0.1, 0.2]},
    "costs": {"Q2": 1.0, "R2": 1.0},
    "initial_state": 1.0
  })");
  fs::path dir = fresh_dir("ineligible_out");
  int code = run(kCli + " solve " + cfg.string() + " --out " + dir.string());
  CHECK(code == 3);
}

TEST_CASE("solve: malformed matrix shape exits 2") {
  fs::path cfg = write_temp_config("badshape", R"({
    "dimensions": {"n": 2, "m1": 1, "m2": 1},
    "grid": {"T": 1.0, "steps": 10},
    "dynamics": {"A": [[1.0, 0.0]], "B2": [[0.0], [1.0]]},
    "costs": {"R2": 1.0}
  })");
  int code = run(kCli + " solve " + cfg.string());
  CHECK(code == 2);
}

TEST_CASE("solve: bad flag value exits 2") {
  fs::path dir = fresh_dir("badflag");
  int code = run(kCli + " solve " + kConfigDir + "/reference_case1.json --case caseX --out " +
                 dir.string());
  CHECK(code == 2);
}

TEST_CASE("simulate: minimal run emits one row per path") {
  fs::path dir = fresh_dir("simulate_min");
  int code = run(kCli + " simulate " + kConfigDir +
                 "/reference_case1.json --paths 2 --out " + dir.string());
  CHECK(code == 0);
  std::string csv = slurp(dir / "ensemble.csv");
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);  // header + 2 paths
}

TEST_CASE("simulate: fixed seed gives byte-identical output across runs and workers") {
  fs::path d1 = fresh_dir("sim_rep_1");
  fs::path d2 = fresh_dir("sim_rep_2");
  fs::path d3 = fresh_dir("sim_rep_3");
  std::string base = kCli + " simulate " + kConfigDir +
                     "/reference_case1.json --paths 400 --seed 77 ";
  CHECK(run(base + "--threads 1 --out " + d1.string()) == 0);
  CHECK(run(base + "--threads 1 --out " + d2.string()) == 0);
  CHECK(run(base + "--threads 5 --out " + d3.string()) == 0);
  std::string a = slurp(d1 / "ensemble.csv");
  CHECK_FALSE(a.empty());
  CHECK(a == slurp(d2 / "ensemble.csv"));
  CHECK(a == slurp(d3 / "ensemble.csv"));
}

TEST_CASE("verify: jump-free reference passes everything including degeneration") {
  fs::path dir = fresh_dir("verify_nojump");
  int code = run(kCli + " verify " + kConfigDir +
                 "/reference_nojump.json --paths 2000 --out " + dir.string());
  CHECK(code == 0);
  std::string report = slurp(dir / "verify_report.csv");
  CHECK(report.find("degeneration,pass") != std::string::npos);
  CHECK(report.find("fail") == std::string::npos);
}

TEST_CASE("verify: unit-jump reference skips degeneration, rest passes") {
  fs::path dir = fresh_dir("verify_case1");
  int code = run(kCli + " verify " + kConfigDir +
                 "/reference_case1.json --paths 2000 --out " + dir.string());
  CHECK(code == 0);
  std::string report = slurp(dir / "verify_report.csv");
  CHECK(report.find("degeneration,skip") != std::string::npos);
}
