#pragma once

#include <string>

#include "qc1d/errors.hpp"

namespace qc1d {

/// The four lattice models handled by this library.
enum class Model { atomistic, continuum, qce, qnl };

inline const char* to_string(Model m) {
  switch (m) {
    case Model::atomistic: return "atomistic";
    case Model::continuum: return "continuum";
    case Model::qce: return "qce";
    case Model::qnl: return "qnl";
  }
  return "?";
}

inline Model parse_model(const std::string& s) {
  if (s == "atomistic" || s == "a") return Model::atomistic;
  if (s == "continuum" || s == "cont" || s == "c") return Model::continuum;
  if (s == "qce") return Model::qce;
  if (s == "qnl") return Model::qnl;
  throw ConfigError("unknown model '" + s + "' (expected atomistic|continuum|qce|qnl)");
}

/// True for the two coupled models that own an atomistic/continuum interface.
inline bool is_coupled(Model m) { return m == Model::qce || m == Model::qnl; }

}  // namespace qc1d
