#pragma once

#include <cstdint>
#include <string>

#include "stackjd/model.hpp"

namespace stackjd {

// One run = one configuration file; command-line flags only override the
// fields marked below.
struct RunConfig {
  ModelSpec model;
  CostSpec costs;
  int paths = 10000;            // --paths
  std::uint64_t seed = 12345;   // --seed
  std::string case_selection = "auto";  // --case: auto|case1|case2
  std::string out_dir;          // --out; default env STACKJD_OUT, then "."
  double condition_cap = 1e12;
  double perturbation_eps = 0.1;
};

// Parses the JSON configuration. Throws ConfigError with the offending field
// path on any structural problem.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

}  // namespace stackjd
