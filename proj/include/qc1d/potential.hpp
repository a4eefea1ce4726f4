#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/model.hpp"

namespace qc1d {

/// Lennard-Jones pair potential normalized to phi(r) = r^-12 - 2 r^-6
/// (minimum at r = 1 with depth 1).
struct LennardJones {
  double value(double r) const {
    check(r);
    const double s6 = std::pow(r, -6.0);
    return s6 * s6 - 2.0 * s6;
  }
  double deriv(double r) const {
    check(r);
    return -12.0 * std::pow(r, -13.0) + 12.0 * std::pow(r, -7.0);
  }
  double deriv2(double r) const {
    check(r);
    return 156.0 * std::pow(r, -14.0) - 84.0 * std::pow(r, -8.0);
  }

 private:
  static void check(double r) {
    if (!(r > 0.0)) {
      throw ConfigError("potential: Lennard-Jones is undefined at r = " + std::to_string(r));
    }
  }
};

/// Bypass that pins the four linearization constants directly, so tests can
/// work with exact rationals independent of potential evaluation error.
struct ExplicitCoeffs {
  double phi1_f;    ///< phi'(F)
  double phi2_f;    ///< phi''(F)
  double phi1_2f;   ///< phi'(2F)
  double phi2_2f;   ///< phi''(2F)
};

using PairPotential = std::variant<LennardJones, ExplicitCoeffs>;

/// CLI potential string: "lj" or "explicit:phi1F,phi2F,phi1_2F,phi2_2F".
inline PairPotential parse_potential(const std::string& s) {
  if (s == "lj") return LennardJones{};
  const std::string prefix = "explicit:";
  if (s.rfind(prefix, 0) == 0) {
    std::stringstream ss(s.substr(prefix.size()));
    std::vector<double> vals;
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t pos = 0;
        vals.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("potential: bad number '" + tok + "' in '" + s + "'");
      }
    }
    if (vals.size() != 4) {
      throw ConfigError("potential: 'explicit:' needs 4 comma-separated values, got " +
                        std::to_string(vals.size()));
    }
    return ExplicitCoeffs{vals[0], vals[1], vals[2], vals[3]};
  }
  throw ConfigError("potential: unknown selector '" + s + "' (expected \"lj\" or \"explicit:a,b,c,d\")");
}

enum class RootStatus { ok, degenerate, complex_pair };

/// Linearization of a pair potential about the uniform strain F: the four
/// derivative constants plus everything derived from them.
///
///   c_cont  = phi''_F + 4 phi''_2F   (continuum modulus)
///   nu_qce  = phi''_F - 5 |phi''_2F| (QCE coercivity constant)
///   nu_qnl  = phi''_F - 4 |phi''_2F| (QNL coercivity constant)
///   lambda  = the > 1 root of the second-neighbor characteristic equation
struct LinearizedCoeffs {
  double phi1_f = 0.0;
  double phi2_f = 0.0;
  double phi1_2f = 0.0;
  double phi2_2f = 0.0;
  double nu_qce = 0.0;
  double nu_qnl = 0.0;
  double c_cont = 0.0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  RootStatus lambda_status = RootStatus::degenerate;
};

namespace detail {

// Discriminants in [-1e-14, 0) are treated as exact zeros; cancellation at
// the stability boundary otherwise produces spurious complex-root errors.
inline constexpr double discriminant_zero_band = -1e-14;

inline RootStatus classify_root(double phi2_f, double phi2_2f, double* lambda_out) {
  if (phi2_2f == 0.0) return RootStatus::degenerate;
  double disc = phi2_f * phi2_f + 4.0 * phi2_f * phi2_2f;
  if (disc < 0.0 && disc >= discriminant_zero_band) disc = 0.0;
  if (disc < 0.0) return RootStatus::complex_pair;
  const double lam = ((phi2_f + 2.0 * phi2_2f) + std::sqrt(disc)) / (-2.0 * phi2_2f);
  if (lambda_out) *lambda_out = lam;
  return RootStatus::ok;
}

}  // namespace detail

/// Fill the linearization constants from phi at F and 2F (or pass through an
/// ExplicitCoeffs bypass).  Assumption violations are not rejected here;
/// check_assumptions() reports them.
inline LinearizedCoeffs linearize(const PairPotential& potential, double strain_f) {
  if (!(strain_f > 0.0)) {
    throw ConfigError("linearize: strain must be positive, got " + std::to_string(strain_f));
  }
  LinearizedCoeffs c;
  if (const auto* e = std::get_if<ExplicitCoeffs>(&potential)) {
    c.phi1_f = e->phi1_f;
    c.phi2_f = e->phi2_f;
    c.phi1_2f = e->phi1_2f;
    c.phi2_2f = e->phi2_2f;
  } else {
    const auto& lj = std::get<LennardJones>(potential);
    c.phi1_f = lj.deriv(strain_f);
    c.phi2_f = lj.deriv2(strain_f);
    c.phi1_2f = lj.deriv(2.0 * strain_f);
    c.phi2_2f = lj.deriv2(2.0 * strain_f);
  }
  c.c_cont = c.phi2_f + 4.0 * c.phi2_2f;
  c.nu_qce = c.phi2_f - 5.0 * std::abs(c.phi2_2f);
  c.nu_qnl = c.phi2_f - 4.0 * std::abs(c.phi2_2f);
  double lam = std::numeric_limits<double>::quiet_NaN();
  c.lambda_status = detail::classify_root(c.phi2_f, c.phi2_2f, &lam);
  if (c.lambda_status == RootStatus::ok && lam > 0.0) {
    c.lambda = lam;
  } else if (c.lambda_status == RootStatus::ok) {
    // negative root: oscillatory regime (phi''_2F > 0); flag it
    c.lambda = lam;
    c.lambda_status = RootStatus::complex_pair;
  }
  return c;
}

/// The > 1 root of the characteristic equation of the homogeneous
/// second-neighbor scheme,
///   -phi''_2F L^2 - phi''_F L + 2(phi''_F + phi''_2F) - phi''_F/L - phi''_2F/L^2 = 0,
/// whose root set is {1, 1, lambda, 1/lambda}.
inline double decay_root(const LinearizedCoeffs& c) {
  if (c.phi2_2f == 0.0) {
    throw AssumptionError("decay_root: phi''_2F = 0, characteristic equation degenerates");
  }
  if (c.phi2_2f > 0.0) {
    throw AssumptionError("decay_root: phi''_2F > 0 gives a negative (oscillatory) root");
  }
  double lam = 0.0;
  const RootStatus st = detail::classify_root(c.phi2_f, c.phi2_2f, &lam);
  if (st == RootStatus::complex_pair) {
    throw AssumptionError("decay_root: negative discriminant, roots form a complex pair");
  }
  return lam;
}

struct AssumptionCheck {
  std::string name;
  double margin;  ///< amount by which the inequality holds; <= 0 means failed
  bool pass;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool oscillatory_risk = false;  ///< set when phi''_2F >= 0 (lambda not real > 1)
  bool all_pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

/// Report (never throw) the standing assumptions with margins:
/// c_cont > 0, phi''_F > 0, phi''_2F < 0, and the model-specific coercivity
/// constant nu > 0 for the coupled models.
inline AssumptionReport check_assumptions(const LinearizedCoeffs& c, Model which) {
  AssumptionReport rep;
  rep.checks.push_back({"c_cont > 0", c.c_cont, c.c_cont > 0.0});
  rep.checks.push_back({"phi''_F > 0", c.phi2_f, c.phi2_f > 0.0});
  rep.checks.push_back({"phi''_2F < 0", -c.phi2_2f, c.phi2_2f < 0.0});
  if (which == Model::qce) {
    rep.checks.push_back({"nu_qce > 0", c.nu_qce, c.nu_qce > 0.0});
  } else if (which == Model::qnl) {
    rep.checks.push_back({"nu_qnl > 0", c.nu_qnl, c.nu_qnl > 0.0});
  }
  rep.oscillatory_risk = (c.phi2_2f >= 0.0) || c.lambda_status != RootStatus::ok;
  return rep;
}

/// Coercivity constant used by stability probes for each model.  The
/// uncoupled models are coercive with the same constant as QNL (atomistic)
/// or with the continuum modulus.
inline double stability_constant(const LinearizedCoeffs& c, Model m) {
  switch (m) {
    case Model::atomistic: return c.nu_qnl;
    case Model::continuum: return c.c_cont;
    case Model::qce: return c.nu_qce;
    case Model::qnl: return c.nu_qnl;
  }
  return 0.0;
}

}  // namespace qc1d
