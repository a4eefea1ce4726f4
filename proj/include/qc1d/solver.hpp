#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/lattice.hpp"
#include "qc1d/loads.hpp"
#include "qc1d/model.hpp"
#include "qc1d/operators.hpp"

namespace qc1d {

struct SolveOptions {
  /// Hard-error threshold on the relative compatibility defect
  /// |sum b_j| / (2N max|b|); smaller defects are projected out and reported.
  double compat_hard_tol = 1e-6;
  /// Relative oddness tolerance asserted on model solutions.
  double odd_tol = 1e-9;
};

struct SolveReport {
  PeriodicField solution;      ///< mean-zero solution
  double residual_norm;        ///< l2 norm of L u - b (projected b)
  double compatibility_defect; ///< |sum b_j| of the original right-hand side
};

namespace detail {

inline Eigen::MatrixXd dense_matrix(const PeriodicOperator& op) {
  const int n = op.lattice().size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (long j = -op.lattice().n_half + 1; j <= op.lattice().n_half; ++j) {
    PeriodicField probe(op.lattice().n_half);  // index bookkeeping only
    const auto& row = op.band_row(j);
    const std::size_t r = probe.slot(j);
    for (int o = -2; o <= 2; ++o) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(probe.slot(j + o))) +=
          row[static_cast<std::size_t>(o + 2)];
    }
  }
  return m;
}

/// Augmented mean-zero system [[L, 1], [1^T, 0]]; the scalar multiplier
/// enforces the mean constraint on the otherwise singular periodic operator.
inline Eigen::VectorXd solve_augmented(const PeriodicOperator& op, const Eigen::VectorXd& rhs) {
  const int n = op.lattice().size();
  if (n + 1 <= 513) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    m.topLeftCorner(n, n) = dense_matrix(op);
    m.block(0, n, n, 1).setOnes();
    m.block(n, 0, 1, n).setOnes();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    return lu.solve(rhs);
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(5 * n + 2 * n + 1));
  PeriodicField probe(op.lattice().n_half);
  for (long j = -op.lattice().n_half + 1; j <= op.lattice().n_half; ++j) {
    const auto& row = op.band_row(j);
    const int r = static_cast<int>(probe.slot(j));
    for (int o = -2; o <= 2; ++o) {
      const double v = row[static_cast<std::size_t>(o + 2)];
      if (v != 0.0) trips.emplace_back(r, static_cast<int>(probe.slot(j + o)), v);
    }
  }
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, n, 1.0);
    trips.emplace_back(n, i, 1.0);
  }
  Eigen::SparseMatrix<double> m(n + 1, n + 1);
  m.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(m);
  lu.factorize(m);
  if (lu.info() != Eigen::Success) {
    throw SolverError("sparse factorization of the augmented system broke down");
  }
  return lu.solve(rhs);
}

}  // namespace detail

/// Solve L u = b on the mean-zero subspace via the saddle augmentation.  The
/// compatibility defect sum b_j is always projected out before solving and
/// reported; it is a hard error only above compat_hard_tol relative to b.
inline SolveReport solve_mean_zero(const PeriodicOperator& op, const PeriodicField& b,
                                   const SolveOptions& opt = {}) {
  const LatticeConfig& lat = op.lattice();
  if (b.size() != lat.size()) {
    throw ConfigError("solve_mean_zero: right-hand side length mismatch");
  }
  const int n = lat.size();
  const double defect = field_sum(b);
  const double bmax = max_abs(b);
  if (bmax > 0.0 && std::abs(defect) > opt.compat_hard_tol * static_cast<double>(n) * bmax) {
    throw SolverError("incompatible right-hand side: |sum b| = " + std::to_string(std::abs(defect)) +
                      " with max|b| = " + std::to_string(bmax));
  }

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  const double shift = defect / static_cast<double>(n);
  for (std::size_t i = 0; i < b.raw().size(); ++i) {
    rhs(static_cast<Eigen::Index>(i)) = b.raw()[i] - shift;
  }
  const Eigen::VectorXd x = detail::solve_augmented(op, rhs);

  PeriodicField u(lat.n_half);
  for (std::size_t i = 0; i < u.raw().size(); ++i) u.raw()[i] = x(static_cast<Eigen::Index>(i));
  const double mean = field_mean(u);
  for (double& v : u.raw()) v -= mean;
  u.mean_zero = true;

  PeriodicField resid = op.apply(u);
  for (std::size_t i = 0; i < resid.raw().size(); ++i) {
    resid.raw()[i] -= rhs(static_cast<Eigen::Index>(i));
  }
  const double rnorm = norm_lp(resid, 2.0, lat.h);
  const double bound = 1e-10 * (op.inf_norm() * norm_linf(u) + bmax);
  if (rnorm > std::max(bound, 1e-300)) {
    throw SolverError("residual " + std::to_string(rnorm) + " exceeds bound " +
                      std::to_string(bound) + "; operator is numerically singular");
  }
  return SolveReport{std::move(u), rnorm, std::abs(defect)};
}

/// Solve one model under a sine-series load: rhs is f + g for QCE (the ghost
/// forcing moves to the right-hand side) and f for every other model.  The
/// solution of an odd load is odd; this is asserted, not assumed.
inline SolveReport solve_model(Model model, const LatticeConfig& lattice,
                               const LinearizedCoeffs& coeffs, const LoadSpec& load,
                               const SolveOptions& opt = {}) {
  const PeriodicOperator op = assemble(model, lattice, coeffs);
  PeriodicField b = sample_load(load, lattice);
  if (model == Model::qce) {
    const GhostVector gv = ghost_vector(lattice, coeffs);
    for (std::size_t i = 0; i < b.raw().size(); ++i) b.raw()[i] += gv.g.raw()[i];
  }
  SolveReport rep = solve_mean_zero(op, b, opt);

  // odd fields are the fixed points of the involution: Su = u
  const PeriodicField su = apply_involution(rep.solution);
  double dev = 0.0;
  for (std::size_t i = 0; i < su.raw().size(); ++i) {
    dev = std::max(dev, std::abs(rep.solution.raw()[i] - su.raw()[i]));
  }
  const double unorm = norm_linf(rep.solution);
  if (unorm > 0.0 && dev > opt.odd_tol * unorm) {
    throw SolverError("model solution lost oddness: |u + Su| = " + std::to_string(dev) +
                      " vs |u| = " + std::to_string(unorm));
  }
  rep.solution.parity = Parity::odd;
  return rep;
}

}  // namespace qc1d
