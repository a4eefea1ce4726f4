#pragma once

#include <stdexcept>
#include <string>

namespace qc1d {

/// Base class for all qc1d errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: bad lattice parameters, malformed option strings,
/// dimension mismatches.  CLI exit code 2.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config: " + msg) {}
};

/// A standing model assumption is violated (ellipticity, potential signs,
/// compatible loading, real decay roots).  CLI exit code 3.
struct AssumptionError : Error {
  explicit AssumptionError(const std::string& msg) : Error("assumption: " + msg) {}
};

/// Linear solve failed: incompatible right-hand side or factorization
/// breakdown.  CLI exit code 4.
struct SolverError : Error {
  explicit SolverError(const std::string& msg) : Error("solver: " + msg) {}
};

/// File system failure while writing results.  CLI exit code 1.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

}  // namespace qc1d
