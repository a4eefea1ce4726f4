#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/lattice.hpp"
#include "qc1d/potential.hpp"

namespace qc1d {

/// One term A sin(m pi x) of an odd, 2-periodic load.
struct SineMode {
  int mode;          ///< m >= 1
  double amplitude;  ///< A
};

/// Finite sine series f(x) = sum_i A_i sin(m_i pi x).  Restricting loads to
/// this family keeps the continuum solution and its first four derivatives in
/// closed form.  An empty series is the zero load.
struct LoadSpec {
  std::vector<SineMode> modes;

  static LoadSpec zero() { return {}; }
  static LoadSpec single(int m, double amplitude) { return {{SineMode{m, amplitude}}}; }

  bool is_zero() const { return modes.empty(); }

  double value(double x) const {
    double s = 0.0;
    for (const auto& t : modes) s += t.amplitude * std::sin(t.mode * std::numbers::pi * x);
    return s;
  }
};

/// CLI load string: "zero" or "sin:m,A[;m,A...]".
inline LoadSpec parse_load(const std::string& s) {
  if (s == "zero") return LoadSpec::zero();
  const std::string prefix = "sin:";
  if (s.rfind(prefix, 0) != 0) {
    throw ConfigError("load: unknown selector '" + s + "' (expected \"zero\" or \"sin:m,A[;m,A...]\")");
  }
  LoadSpec spec;
  std::stringstream ss(s.substr(prefix.size()));
  std::string term;
  while (std::getline(ss, term, ';')) {
    const auto comma = term.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("load: term '" + term + "' must be 'm,A'");
    }
    try {
      std::size_t pos = 0;
      const std::string mstr = term.substr(0, comma);
      const std::string astr = term.substr(comma + 1);
      const int m = std::stoi(mstr, &pos);
      if (pos != mstr.size() || m < 1) throw std::invalid_argument(mstr);
      pos = 0;
      const double a = std::stod(astr, &pos);
      if (pos != astr.size()) throw std::invalid_argument(astr);
      spec.modes.push_back({m, a});
    } catch (const std::exception&) {
      throw ConfigError("load: bad term '" + term + "' in '" + s + "'");
    }
  }
  if (spec.modes.empty()) {
    throw ConfigError("load: '" + s + "' contains no terms");
  }
  return spec;
}

/// Sample f at the lattice points.  The result is flagged odd and its
/// resultant sum f_j is verified to vanish (compatibility of the periodic
/// equilibrium problem).
inline PeriodicField sample_load(const LoadSpec& spec, const LatticeConfig& lattice) {
  PeriodicField f(lattice.n_half);
  for (std::size_t i = 0; i < f.raw().size(); ++i) {
    const long j = f.index_of_slot(i);
    f.at(j) = spec.value(lattice.x(j));
  }
  f.parity = Parity::odd;
  const double resultant = field_sum(f);
  const double tol = static_cast<double>(f.size()) *
                     std::numeric_limits<double>::epsilon() * std::max(1e-300, max_abs(f));
  if (std::abs(resultant) > tol) {
    throw AssumptionError("load: sampled resultant " + std::to_string(resultant) +
                          " exceeds tolerance " + std::to_string(tol));
  }
  f.mean_zero = true;
  return f;
}

/// Closed-form solution of the continuum problem -c_cont u'' = f for a sine
/// series load, with derivatives through fourth order.  Each mode divides by
/// c_cont (m pi)^2.
class ExactSolution {
 public:
  ExactSolution(const LoadSpec& spec, const LinearizedCoeffs& coeffs)
      : c_cont_(coeffs.c_cont) {
    if (!(c_cont_ > 0.0)) {
      throw AssumptionError("exact_solution: ellipticity c_cont > 0 required, got " +
                            std::to_string(c_cont_));
    }
    for (const auto& t : spec.modes) {
      const double k = t.mode * std::numbers::pi;
      terms_.push_back({k, t.amplitude / (c_cont_ * k * k)});
    }
  }

  double value(double x) const { return eval(x, 0); }
  double d1(double x) const { return eval(x, 1); }
  double d2(double x) const { return eval(x, 2); }
  double d3(double x) const { return eval(x, 3); }
  double d4(double x) const { return eval(x, 4); }

  double c_cont() const { return c_cont_; }

  /// L^2(-1,1) norm of the fourth derivative, in closed form; distinct sine
  /// modes are orthogonal with unit L^2 norm on (-1,1).
  double fourth_deriv_l2() const {
    double s = 0.0;
    for (const auto& t : terms_) {
      const double a4 = t.coeff * t.k * t.k * t.k * t.k;
      s += a4 * a4;
    }
    return std::sqrt(s);
  }

  /// Sample u_e at the lattice points (parity marker set odd).
  PeriodicField sample(const LatticeConfig& lattice) const {
    PeriodicField u(lattice.n_half);
    for (std::size_t i = 0; i < u.raw().size(); ++i) {
      const long j = u.index_of_slot(i);
      u.at(j) = value(lattice.x(j));
    }
    u.parity = Parity::odd;
    return u;
  }

 private:
  struct Term {
    double k;      // m pi
    double coeff;  // A / (c (m pi)^2)
  };

  double eval(double x, int order) const {
    double s = 0.0;
    for (const auto& t : terms_) {
      double kp = 1.0;
      for (int i = 0; i < order; ++i) kp *= t.k;
      // derivative cycle sin -> cos -> -sin -> -cos
      double v = 0.0;
      switch (order % 4) {
        case 0: v = std::sin(t.k * x); break;
        case 1: v = std::cos(t.k * x); break;
        case 2: v = -std::sin(t.k * x); break;
        case 3: v = -std::cos(t.k * x); break;
      }
      s += t.coeff * kp * v;
    }
    return s;
  }

  double c_cont_;
  std::vector<Term> terms_;
};

inline ExactSolution exact_solution(const LoadSpec& spec, const LinearizedCoeffs& coeffs) {
  return ExactSolution(spec, coeffs);
}

}  // namespace qc1d
