#pragma once

#include <stdexcept>
#include <string>

namespace stackjd {

enum class SolverFault {
  BlowUp,        // non-finite value during integration
  SingularGain,  // control-weight matrix not invertible within the condition cap
  SingularBlock, // a block invertibility condition of the leader system failed
  PathDiverged,  // simulated path left the finite range
};

inline const char* to_string(SolverFault f) {
  switch (f) {
    case SolverFault::BlowUp: return "blow-up";
    case SolverFault::SingularGain: return "singular gain";
    case SolverFault::SingularBlock: return "singular block";
    case SolverFault::PathDiverged: return "path diverged";
  }
  return "unknown";
}

// Raised by the solvers and the simulator; carries the first offending time.
class SolverError : public std::runtime_error {
 public:
  SolverError(SolverFault fault, double time, const std::string& detail)
      : std::runtime_error(std::string(to_string(fault)) + " at s=" +
                           std::to_string(time) + (detail.empty() ? "" : ": " + detail)),
        fault_(fault),
        time_(time) {}

  SolverFault fault() const noexcept { return fault_; }
  double time() const noexcept { return time_; }

 private:
  SolverFault fault_;
  double time_;
};

// Raised while ingesting a configuration file; carries the field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(field) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace stackjd
