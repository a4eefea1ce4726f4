#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/lattice.hpp"
#include "qc1d/loads.hpp"
#include "qc1d/model.hpp"
#include "qc1d/operators.hpp"
#include "qc1d/potential.hpp"
#include "qc1d/solver.hpp"

namespace qc1d {

/// Residual of the sampled continuum solution under a coupled operator,
/// split into the low-order interface part rho (closed form, built from
/// analytic derivatives at x_{K+1/2}) and the second-order remainder
/// sigma = residual - rho.
struct ResidualSplit {
  PeriodicField rho;
  PeriodicField sigma;
  /// Signed sum of rho over the interface rows K-1..K+2.  The leading
  /// 1/h and u'' terms cancel in the sum, leaving h phi''_2F u''' (QCE and
  /// QNL alike for the stencil orientation used here).
  double delta_rho;
};

namespace detail {

struct InterfaceRho {
  // values at rows K-1, K, K+1, K+2 (QNL uses only the middle two)
  std::array<double, 4> rows;
};

/// Closed-form interface residual rows.  For QCE these are the three
/// lowest-order Taylor terms of the coupled rows about x_{K+1/2}; each row is
/// a sum of a 1/h term, a u'' term, and an O(h) u''' term.  The QNL rows are
/// O(1): the u'' mismatch of the two quasi-nonlocal rows plus the O(h)
/// correction, oriented so that the remainder sigma is O(h^2).
inline InterfaceRho interface_rho_rows(Model model, const ExactSolution& exact,
                                       const LatticeConfig& lat, const LinearizedCoeffs& c) {
  const double xm = lat.x_interface_mid();
  const double d1 = exact.d1(xm);
  const double d2 = exact.d2(xm);
  const double d3 = exact.d3(xm);
  const double p2 = c.phi2_2f;
  InterfaceRho r{};
  if (model == Model::qce) {
    const double x = (0.5 * c.phi1_2f + p2 * d1) / lat.h;
    const double y = 0.5 * p2 * d2;
    const double z = p2 * d3 * lat.h;
    r.rows = {x - y + 7.0 * z / 24.0, -x + y + 5.0 * z / 24.0,
              -x - y + 5.0 * z / 24.0, x + y + 7.0 * z / 24.0};
  } else if (model == Model::qnl) {
    r.rows = {0.0, p2 * d2 + 0.5 * p2 * d3 * lat.h, -p2 * d2 + 0.5 * p2 * d3 * lat.h, 0.0};
  } else {
    throw ConfigError("interface residual is defined only for the coupled models");
  }
  return r;
}

inline void require_separated_interface(const LatticeConfig& lat, const char* where) {
  if (lat.k_interface > lat.n_half - 3) {
    throw ConfigError(std::string(where) +
                      ": interface rows K-1..K+2 must not straddle the period seam; "
                      "need K <= N-3, got K=" + std::to_string(lat.k_interface) +
                      ", N=" + std::to_string(lat.n_half));
  }
}

}  // namespace detail

/// Split op * u_e - g - f (QCE) or op * u_e - f (QNL) into rho + sigma.
/// rho comes from the closed-form table, never from numerical
/// differentiation, so the delta_rho cancellation can be checked at 1e-9.
inline ResidualSplit residual_split(Model model, const ExactSolution& exact,
                                    const LatticeConfig& lat, const LinearizedCoeffs& c,
                                    const PeriodicOperator& op, const GhostVector& ghost,
                                    const PeriodicField& f) {
  if (!is_coupled(model)) {
    throw ConfigError("residual_split: model must be qce or qnl");
  }
  detail::require_separated_interface(lat, "residual_split");
  const int k = lat.k_interface;

  PeriodicField ue = exact.sample(lat);
  PeriodicField total = op.apply(ue);
  for (std::size_t i = 0; i < total.raw().size(); ++i) {
    total.raw()[i] -= f.raw()[i];
    if (model == Model::qce) total.raw()[i] -= ghost.g.raw()[i];
  }

  const detail::InterfaceRho rows = detail::interface_rho_rows(model, exact, lat, c);
  PeriodicField rho(lat.n_half);
  for (int i = 0; i < 4; ++i) {
    const long j = k - 1 + i;
    rho.at(j) = rows.rows[static_cast<std::size_t>(i)];
    rho.at(-j) = -rows.rows[static_cast<std::size_t>(i)];
  }
  rho.parity = Parity::odd;
  rho.mean_zero = true;

  PeriodicField sigma(lat.n_half);
  for (std::size_t i = 0; i < sigma.raw().size(); ++i) {
    sigma.raw()[i] = total.raw()[i] - rho.raw()[i];
  }
  sigma.parity = Parity::odd;

  const double drho = compensated_sum(std::span<const double>(rows.rows.data(), 4));
  return ResidualSplit{std::move(rho), std::move(sigma), drho};
}

/// Coefficients of the explicit odd interface-error field
///   e_j = m1 h j + beta (lambda^j - lambda^-j)/lambda^K   for 0 <= j <= K,
///   e_{K+1} = m2 h (K+1) - m2 + e_hat_k1                  (QCE only),
///   e_j = m2 h j - m2                                     further out,
/// extended oddly to negative indices.
struct InterfaceSolution {
  double m1 = 0.0;
  double m2 = 0.0;
  double e_hat_k1 = 0.0;  ///< perturbation of the linear branch at K+1; QCE only
  double beta = 0.0;
  double lambda = 0.0;
  int k_interface = 0;
  double condition = 0.0;          ///< condition number of the reduced matrix
  bool near_singular = false;      ///< condition > 1e8; solved by least squares
  double interface_residual_rel = 0.0;  ///< max |op e - rho| / max |rho|

  /// Decaying odd mode gamma_j = (lambda^j - lambda^-j)/lambda^K, evaluated
  /// in overflow-safe form.
  double gamma(long j) const {
    return std::pow(lambda, static_cast<double>(j - k_interface)) -
           std::pow(lambda, -static_cast<double>(j + k_interface));
  }
};

namespace detail {

/// Reduced interface systems after eliminating m1 via
/// m1 = m2 + h * delta_rho / c_cont:
///   QCE: rows K-1, K+1, K+2; 3x3 (A~ + h B~) [m2, e_hat, beta]^T = b~
///   QNL: rows K-1, K;        2x2  A~        [m2, beta]^T        = b~
/// with b~_r = h^2 rho_r - h^2 (delta_rho / c_cont) w_r.
struct ReducedSystem {
  Eigen::MatrixXd m;
  Eigen::VectorXd rhs;
};

inline ReducedSystem reduced_interface_system(Model model, const LatticeConfig& lat,
                                              const LinearizedCoeffs& c, double lambda,
                                              const InterfaceRho& rho, double delta_rho) {
  const int k = lat.k_interface;
  const double h = lat.h;
  const double p1 = c.phi2_f;
  const double p2 = c.phi2_2f;
  const double cc = c.c_cont;
  const auto gam = [&](long j) {
    return std::pow(lambda, static_cast<double>(j - k)) -
           std::pow(lambda, -static_cast<double>(j + k));
  };
  ReducedSystem sys;
  if (model == Model::qce) {
    Eigen::Matrix3d a;
    a << 0.5 * p2, -0.5 * p2, p2 * gam(k + 1) - 0.5 * p2 * gam(k - 1),
        -p1 - 2.5 * p2, 2.0 * p1 + 6.5 * p2,
        -p1 * gam(k) - 2.0 * p2 * gam(k) - 0.5 * p2 * gam(k - 1),
        -0.5 * p2, -p1 - 4.0 * p2, -0.5 * p2 * gam(k);
    Eigen::Matrix3d b;
    b << p2, 0.0, 0.0, -p2, 0.0, 0.0, p2, 0.0, 0.0;
    Eigen::Vector3d w((0.5 * k + 1.5) * p2, -k * p1 - (2.5 * k - 0.5) * p2, -0.5 * k * p2);
    Eigen::Vector3d r(rho.rows[0], rho.rows[2], rho.rows[3]);
    sys.m = a + h * b;
    sys.rhs = h * h * r - h * h * (delta_rho / cc) * w;
  } else {
    Eigen::Matrix2d a;
    a << p2, p2 * gam(k + 1),
        p1 + 2.0 * p2, p1 * gam(k + 1) + p2 * gam(k + 2) + p2 * gam(k);
    Eigen::Vector2d w((k + 1) * p2, (k + 1) * (p1 + 2.0 * p2));
    Eigen::Vector2d r(rho.rows[0], rho.rows[1]);
    sys.m = a;
    sys.rhs = h * h * r - h * h * (delta_rho / cc) * w;
  }
  return sys;
}

inline PeriodicField build_interface_error_field(Model model, const LatticeConfig& lat,
                                                 const InterfaceSolution& sol) {
  PeriodicField e(lat.n_half);
  const int k = lat.k_interface;
  const double h = lat.h;
  for (long j = 0; j <= lat.n_half; ++j) {
    double v;
    if (j <= k) {
      v = sol.m1 * h * static_cast<double>(j) + sol.beta * sol.gamma(j);
    } else if (j == k + 1 && model == Model::qce) {
      v = sol.m2 * h * static_cast<double>(j) - sol.m2 + sol.e_hat_k1;
    } else {
      v = sol.m2 * h * static_cast<double>(j) - sol.m2;
    }
    e.at(j) = v;
    if (j > 0 && j < lat.n_half) e.at(-j) = -v;
  }
  e.parity = Parity::odd;
  return e;
}

}  // namespace detail

/// Build the explicit odd interface-error field: solve the reduced interface
/// system, recover m1 from the interface-sum identity, assemble the field,
/// and verify op * e_rho = rho a posteriori (the omitted interface row is
/// covered by that verification).
inline std::pair<InterfaceSolution, PeriodicField> explicit_interface_error(
    Model model, const ExactSolution& exact, const LatticeConfig& lat,
    const LinearizedCoeffs& c) {
  if (!is_coupled(model)) {
    throw ConfigError("explicit_interface_error: model must be qce or qnl");
  }
  detail::require_separated_interface(lat, "explicit_interface_error");

  const double lambda = decay_root(c);
  const detail::InterfaceRho rows = detail::interface_rho_rows(model, exact, lat, c);
  const double delta_rho = compensated_sum(std::span<const double>(rows.rows.data(), 4));
  detail::ReducedSystem sys = detail::reduced_interface_system(model, lat, c, lambda, rows, delta_rho);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  const double cond = (smin > 0.0) ? smax / smin : std::numeric_limits<double>::infinity();

  InterfaceSolution sol;
  sol.lambda = lambda;
  sol.k_interface = lat.k_interface;
  sol.condition = cond;
  Eigen::VectorXd x;
  if (cond > 1e8) {
    sol.near_singular = true;  // fall back to least squares and keep going
    x = svd.solve(sys.rhs);
  } else {
    x = sys.m.partialPivLu().solve(sys.rhs);
  }
  if (model == Model::qce) {
    sol.m2 = x(0);
    sol.e_hat_k1 = x(1);
    sol.beta = x(2);
  } else {
    sol.m2 = x(0);
    sol.beta = x(1);
  }
  sol.m1 = sol.m2 + lat.h * delta_rho / c.c_cont;

  PeriodicField e = detail::build_interface_error_field(model, lat, sol);

  const PeriodicOperator op = assemble(model, lat, c);
  const PeriodicField le = op.apply(e);
  PeriodicField rho(lat.n_half);
  for (int i = 0; i < 4; ++i) {
    const long j = lat.k_interface - 1 + i;
    rho.at(j) = rows.rows[static_cast<std::size_t>(i)];
    rho.at(-j) = -rows.rows[static_cast<std::size_t>(i)];
  }
  double dev = 0.0;
  for (std::size_t i = 0; i < le.raw().size(); ++i) {
    dev = std::max(dev, std::abs(le.raw()[i] - rho.raw()[i]));
  }
  const double rho_scale = max_abs(rho);
  sol.interface_residual_rel = (rho_scale > 0.0) ? dev / rho_scale : dev;
  if (rho_scale > 0.0 && sol.interface_residual_rel > 1e-6) {
    throw std::logic_error("explicit_interface_error: a-posteriori check failed, "
                           "|op e - rho|/|rho| = " + std::to_string(sol.interface_residual_rel));
  }
  return {sol, std::move(e)};
}

/// Error components from solving L e_rho = rho and L e_sigma = sigma.
struct ErrorComponents {
  PeriodicField e_rho;
  PeriodicField e_sigma;
};

struct ErrorReport {
  double e_linf;
  double de_l1;
  double de_l2;
  double de_linf;
  PeriodicField error;
  std::optional<ErrorComponents> components;
};

/// Error of one model against the continuum solution: e_j = u_e(x_j) - u_j
/// with both fields projected to mean zero.  Optionally also splits
/// e = e_rho + e_sigma through the residual split (coupled models only).
inline ErrorReport error_report(Model model, const LatticeConfig& lat,
                                const LinearizedCoeffs& c, const LoadSpec& load,
                                bool with_components = false, const SolveOptions& opt = {}) {
  const SolveReport solved = solve_model(model, lat, c, load, opt);
  const ExactSolution exact(load, c);
  const PeriodicField ue = project_mean_zero(exact.sample(lat));

  PeriodicField e(lat.n_half);
  for (std::size_t i = 0; i < e.raw().size(); ++i) {
    e.raw()[i] = ue.raw()[i] - solved.solution.raw()[i];
  }
  e.parity = Parity::odd;

  const PeriodicField de = backward_difference(e, lat);
  ErrorReport rep{norm_linf(e), norm_lp(de, 1.0, lat.h), norm_lp(de, 2.0, lat.h),
                  norm_linf(de), std::move(e), std::nullopt};

  if (with_components && is_coupled(model)) {
    const PeriodicOperator op = assemble(model, lat, c);
    const GhostVector gv = ghost_vector(lat, c);
    const PeriodicField f = sample_load(load, lat);
    const ResidualSplit split = residual_split(model, exact, lat, c, op, gv, f);
    SolveReport erho = solve_mean_zero(op, split.rho, opt);
    SolveReport esig = solve_mean_zero(op, split.sigma, opt);
    rep.components = ErrorComponents{std::move(erho.solution), std::move(esig.solution)};
  }
  return rep;
}

/// Interface placement rule for refinement sweeps.
struct KRule {
  enum class Kind { fraction, count };
  Kind kind = Kind::fraction;
  double fraction = 0.25;
  int count = 0;

  int k_for(int n) const {
    if (kind == Kind::fraction) return static_cast<int>(std::lround(fraction * n));
    return count;
  }

  /// CLI K string: "frac:theta" (K = round(theta N)) or "count:k".
  static KRule parse(const std::string& s) {
    KRule r;
    try {
      if (s.rfind("frac:", 0) == 0) {
        r.kind = Kind::fraction;
        std::size_t pos = 0;
        const std::string v = s.substr(5);
        r.fraction = std::stod(v, &pos);
        if (pos != v.size() || !(r.fraction > 0.0) || !(r.fraction < 1.0)) {
          throw std::invalid_argument(v);
        }
        return r;
      }
      if (s.rfind("count:", 0) == 0) {
        r.kind = Kind::count;
        std::size_t pos = 0;
        const std::string v = s.substr(6);
        r.count = std::stoi(v, &pos);
        if (pos != v.size() || r.count < 2) throw std::invalid_argument(v);
        return r;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("K: bad value in '" + s + "'");
    }
    throw ConfigError("K: unknown rule '" + s + "' (expected frac:theta or count:k)");
  }
};

enum class FailureKind { none, config, assumption, solver };

struct SweepRow {
  int n_half = 0;
  double h = 0.0;
  int k_interface = 0;
  double e_linf = 0.0;
  double de_l1 = 0.0;
  double de_l2 = 0.0;
  double de_linf = 0.0;
  double nu_margin = 0.0;     ///< model stability constant at this level
  bool outside_theory = false;  ///< nu <= 0: stability theory does not apply
  std::string failure;          ///< nonempty if this level failed
  FailureKind failure_kind = FailureKind::none;
  bool ok() const { return failure.empty(); }
};

struct RateFit {
  double rate = std::numeric_limits<double>::quiet_NaN();
  bool dropped_coarsest = false;
  bool valid = false;
};

namespace detail {

/// Least-squares slope of log(err) against log(h).  The coarsest level is
/// dropped once when its residual from the fit exceeds 3x the fit RMS
/// (pre-asymptotic pollution shows up exactly there).
inline RateFit fit_loglog(const std::vector<double>& hs, const std::vector<double>& errs) {
  RateFit out;
  if (hs.size() < 2 || hs.size() != errs.size()) return out;
  for (double e : errs) {
    if (!(e > 0.0) || !std::isfinite(e)) return out;
  }
  const auto slope = [](const std::vector<double>& xs, const std::vector<double>& ys,
                        std::vector<double>* resid) {
    const std::size_t n = xs.size();
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xm += xs[i];
      ym += ys[i];
    }
    xm /= static_cast<double>(n);
    ym /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (xs[i] - xm) * (ys[i] - ym);
      sxx += (xs[i] - xm) * (xs[i] - xm);
    }
    const double b = sxy / sxx;
    if (resid) {
      resid->resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        (*resid)[i] = ys[i] - (ym + b * (xs[i] - xm));
      }
    }
    return b;
  };
  std::vector<double> xs(hs.size()), ys(hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    xs[i] = std::log(hs[i]);
    ys[i] = std::log(errs[i]);
  }
  std::vector<double> resid;
  double b = slope(xs, ys, &resid);
  double rms = 0.0;
  for (double r : resid) rms += r * r;
  rms = std::sqrt(rms / static_cast<double>(resid.size()));
  // entry 0 is the coarsest level (callers pass N increasing, h decreasing)
  if (hs.size() > 2 && rms > 0.0 && std::abs(resid.front()) > 3.0 * rms) {
    std::vector<double> xs2(xs.begin() + 1, xs.end());
    std::vector<double> ys2(ys.begin() + 1, ys.end());
    b = slope(xs2, ys2, nullptr);
    out.dropped_coarsest = true;
  }
  out.rate = b;
  out.valid = true;
  return out;
}

}  // namespace detail

struct ConvergenceReport {
  Model model = Model::atomistic;
  std::vector<SweepRow> rows;
  RateFit rate_e_linf, rate_de_l1, rate_de_l2, rate_de_linf;
  std::string potential_desc;
  double strain = 0.0;
  std::string load_desc;
  LinearizedCoeffs coeffs;
  bool complete = true;  ///< false if any level failed
};

/// Refinement sweep: per-level error reports plus fitted log-log rates.
/// Failed levels are annotated and skipped by the fit; levels with nu <= 0
/// still run but are marked outside the stability theory.
inline ConvergenceReport convergence_sweep(Model model, const PairPotential& potential,
                                           double strain_f, const LoadSpec& load,
                                           const std::vector<int>& n_list, const KRule& k_rule,
                                           const SolveOptions& opt = {}) {
  if (n_list.size() < 4) {
    throw ConfigError("sweep: need at least 4 refinement levels, got " +
                      std::to_string(n_list.size()));
  }
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw ConfigError("sweep: N list must be strictly increasing");
    }
  }
  ConvergenceReport rep;
  rep.model = model;
  rep.strain = strain_f;
  rep.coeffs = linearize(potential, strain_f);

  for (int n : n_list) {
    SweepRow row;
    row.n_half = n;
    row.h = 1.0 / static_cast<double>(n);
    row.k_interface = k_rule.k_for(n);
    row.nu_margin = stability_constant(rep.coeffs, model);
    row.outside_theory = !(row.nu_margin > 0.0);
    try {
      const LatticeConfig lat(n, row.k_interface, strain_f);
      const ErrorReport er = error_report(model, lat, rep.coeffs, load, false, opt);
      row.e_linf = er.e_linf;
      row.de_l1 = er.de_l1;
      row.de_l2 = er.de_l2;
      row.de_linf = er.de_linf;
    } catch (const ConfigError& err) {
      row.failure = err.what();
      row.failure_kind = FailureKind::config;
      rep.complete = false;
    } catch (const AssumptionError& err) {
      row.failure = err.what();
      row.failure_kind = FailureKind::assumption;
      rep.complete = false;
    } catch (const Error& err) {
      row.failure = err.what();
      row.failure_kind = FailureKind::solver;
      rep.complete = false;
    }
    rep.rows.push_back(row);
  }

  std::vector<double> hs;
  std::vector<double> e0, e1, e2, e3;
  for (const auto& r : rep.rows) {
    if (!r.ok()) continue;
    hs.push_back(r.h);
    e0.push_back(r.e_linf);
    e1.push_back(r.de_l1);
    e2.push_back(r.de_l2);
    e3.push_back(r.de_linf);
  }
  rep.rate_e_linf = detail::fit_loglog(hs, e0);
  rep.rate_de_l1 = detail::fit_loglog(hs, e1);
  rep.rate_de_l2 = detail::fit_loglog(hs, e2);
  rep.rate_de_linf = detail::fit_loglog(hs, e3);
  return rep;
}

struct StabilityProbe {
  double min_ratio = std::numeric_limits<double>::infinity();
  double nu = 0.0;
  int trials = 0;
  int violations = 0;
  double margin() const { return min_ratio - nu; }
};

namespace detail {

/// Deterministic uniform double in [-1, 1); mt19937_64 output mapped by hand
/// so results do not depend on the standard library's distribution choices.
inline double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace detail

/// Coercivity probe: minimum of h v . (L v) / |Dv|_2^2 over random mean-zero
/// fields, reported against the model constant nu.  Violations are counted
/// with a 1e-10 slack for roundoff at equality.
inline StabilityProbe stability_probe(const PeriodicOperator& op, double nu, int trials,
                                      std::uint64_t seed = 12345) {
  if (trials < 1) throw ConfigError("stability_probe: trials must be >= 1");
  StabilityProbe probe;
  probe.nu = nu;
  probe.trials = trials;
  std::mt19937_64 rng(seed);
  const LatticeConfig& lat = op.lattice();
  for (int t = 0; t < trials; ++t) {
    PeriodicField v(lat.n_half);
    for (double& x : v.raw()) x = detail::uniform_pm1(rng);
    v = project_mean_zero(v);
    const PeriodicField dv = backward_difference(v, lat);
    const double denom = norm_lp(dv, 2.0, lat.h);
    if (denom == 0.0) continue;
    const PeriodicField lv = op.apply(v);
    const double ratio = lat.h * compensated_sum([&] {
      std::vector<double> terms(v.raw().size());
      for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = v.raw()[i] * lv.raw()[i];
      return terms;
    }()) / (denom * denom);
    probe.min_ratio = std::min(probe.min_ratio, ratio);
    if (ratio < nu - 1e-10 * std::max(1.0, std::abs(nu))) ++probe.violations;
  }
  return probe;
}

}  // namespace qc1d
