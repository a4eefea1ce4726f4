#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/lattice.hpp"
#include "qc1d/model.hpp"
#include "qc1d/potential.hpp"

namespace qc1d {

/// Symmetric periodic operator with bandwidth 2 and wraparound, in lattice
/// indexing.  All four model operators fit this shape: the atomistic
/// five-point stencil, the continuum three-point stencil, and the coupled
/// operators whose interface rows stay within offsets -2..+2.
///
/// Rows are assembled additively: a bulk stencil per row region plus local
/// interface corrections applied to both interface copies (the mirrored copy
/// gets the mirrored stencil).  Overlapping corrections accumulate, which
/// keeps the assembly valid up to K = N-2 where the two interface
/// neighborhoods meet across the period seam.
class PeriodicOperator {
 public:
  static constexpr int bandwidth = 2;

  Model model() const { return model_; }
  const LatticeConfig& lattice() const { return lattice_; }
  const LinearizedCoeffs& coeffs() const { return coeffs_; }

  /// Entry L_{ij}; both indices wrap periodically.  Zero outside the band.
  double entry(long i, long j) const {
    const long n = lattice_.size();
    long d = (j - i) % n;
    if (d < 0) d += n;
    if (d > n / 2) d -= n;
    if (d < -bandwidth || d > bandwidth) return 0.0;
    return band_[slot(i)][static_cast<std::size_t>(d + bandwidth)];
  }

  /// Band row for lattice index j: coefficients at offsets -2..+2.
  const std::array<double, 5>& band_row(long j) const { return band_[slot(j)]; }

  PeriodicField apply(const PeriodicField& u) const {
    if (u.size() != lattice_.size()) {
      throw ConfigError("apply: field length " + std::to_string(u.size()) +
                        " does not match operator size " + std::to_string(lattice_.size()));
    }
    PeriodicField out(lattice_.n_half);
    for (std::size_t i = 0; i < band_.size(); ++i) {
      const long j = u.index_of_slot(i);
      const auto& row = band_[i];
      out.at(j) = row[0] * u(j - 2) + row[1] * u(j - 1) + row[2] * u(j) +
                  row[3] * u(j + 1) + row[4] * u(j + 2);
    }
    return out;
  }

  /// max_i sum_j |L_ij|, used for residual acceptance bounds.
  double inf_norm() const {
    double m = 0.0;
    for (const auto& row : band_) {
      double s = 0.0;
      for (double v : row) s += std::abs(v);
      m = std::max(m, s);
    }
    return m;
  }

  double max_entry() const {
    double m = 0.0;
    for (const auto& row : band_) {
      for (double v : row) m = std::max(m, std::abs(v));
    }
    return m;
  }

  /// Plain-text triplet dump "i j value", one nonzero per line, rows in
  /// lattice order for offline inspection.
  void write_triplets(std::ostream& os) const {
    const long n = lattice_.size();
    for (long j = -lattice_.n_half + 1; j <= lattice_.n_half; ++j) {
      const auto& row = band_row(j);
      for (int o = -bandwidth; o <= bandwidth; ++o) {
        const double v = row[static_cast<std::size_t>(o + bandwidth)];
        if (v != 0.0) {
          long col = (j + o) % n;
          // report columns in the canonical index window -N+1..N
          while (col < -lattice_.n_half + 1) col += n;
          while (col > lattice_.n_half) col -= n;
          os << j << ' ' << col << ' ' << v << '\n';
        }
      }
    }
  }

  friend PeriodicOperator assemble(Model, const LatticeConfig&, const LinearizedCoeffs&);

 private:
  PeriodicOperator(Model m, const LatticeConfig& lat, const LinearizedCoeffs& c)
      : model_(m), lattice_(lat), coeffs_(c),
        band_(static_cast<std::size_t>(lat.size()), std::array<double, 5>{}) {}

  std::size_t slot(long j) const {
    long m = (j + lattice_.n_half - 1) % static_cast<long>(lattice_.size());
    if (m < 0) m += lattice_.size();
    return static_cast<std::size_t>(m);
  }

  void add(long row, int offset, double value) {
    band_[slot(row)][static_cast<std::size_t>(offset + bandwidth)] += value;
  }

  Model model_;
  LatticeConfig lattice_;
  LinearizedCoeffs coeffs_;
  std::vector<std::array<double, 5>> band_;
};

namespace detail {

struct StencilTerm {
  int offset;
  double value;
};

/// Post-assembly audit.  Symmetry and zero row sums hold because every
/// contribution is a symmetric difference quadratic form; the conjugation
/// identity L_{ij} = L_{-i,-j} must hold bit for bit because the mirrored
/// rows are accumulated from the mirrored term lists in the same order.
/// The bit-exact check doubles as the seam consistency check at the two
/// self-mirror rows j = 0 and j = N.
inline void validate_operator(const PeriodicOperator& op) {
  const LatticeConfig& lat = op.lattice();
  const double scale = op.max_entry();
  const double tol = 1e-12 * std::max(1.0, scale);
  for (long j = -lat.n_half + 1; j <= lat.n_half; ++j) {
    double rs = 0.0;
    for (int o = -2; o <= 2; ++o) rs += op.entry(j, j + o);
    if (std::abs(rs) > tol) {
      throw std::logic_error("operator assembly: row " + std::to_string(j) +
                             " sums to " + std::to_string(rs));
    }
    for (int o = 1; o <= 2; ++o) {
      if (std::abs(op.entry(j, j + o) - op.entry(j + o, j)) > tol) {
        throw std::logic_error("operator assembly: symmetry violated at (" +
                               std::to_string(j) + "," + std::to_string(j + o) + ")");
      }
    }
    for (int o = -2; o <= 2; ++o) {
      if (op.entry(j, j + o) != op.entry(-j, -j - o)) {
        throw std::logic_error("operator assembly: conjugation identity violated at row " +
                               std::to_string(j));
      }
    }
  }
}

}  // namespace detail

/// Assemble the model operator.  Bulk rows: the atomistic five-point stencil
/// on |j| <= K and the continuum three-point stencil elsewhere (uncoupled
/// models use one stencil throughout).  Coupled models add local interface
/// corrections at rows K-1..K+2 (QCE) or K..K+1 (QNL) and their mirrors.
/// Coercivity failures (nu <= 0) do not abort assembly; they are reported by
/// check_assumptions and annotated by sweeps.
inline PeriodicOperator assemble(Model model, const LatticeConfig& lattice,
                                 const LinearizedCoeffs& coeffs) {
  PeriodicOperator op(model, lattice, coeffs);
  const double ih2 = 1.0 / (lattice.h * lattice.h);
  const double p1 = coeffs.phi2_f;
  const double p2 = coeffs.phi2_2f;
  const double cc = coeffs.c_cont;
  const int k = lattice.k_interface;

  const std::array<detail::StencilTerm, 5> atom_stencil{{
      {-2, -p2}, {-1, -p1}, {0, 2.0 * (p1 + p2)}, {1, -p1}, {2, -p2}}};
  const std::array<detail::StencilTerm, 3> cont_stencil{{{-1, -cc}, {0, 2.0 * cc}, {1, -cc}}};

  for (long j = -lattice.n_half + 1; j <= lattice.n_half; ++j) {
    const bool atom_row =
        model == Model::atomistic || (is_coupled(model) && std::labs(j) <= k);
    if (atom_row) {
      for (const auto& t : atom_stencil) op.add(j, t.offset, t.value * ih2);
    } else {
      for (const auto& t : cont_stencil) op.add(j, t.offset, t.value * ih2);
    }
  }

  std::vector<std::pair<long, std::vector<detail::StencilTerm>>> corrections;
  if (model == Model::qce) {
    // Half-bond energy splitting leaves these boundary terms on top of the
    // bulk stencils.
    corrections = {
        {k - 1, {{2, 0.5 * p2}, {0, -0.5 * p2}}},
        {k, {{1, -2.0 * p2}, {0, 2.0 * p2}, {2, 0.5 * p2}, {0, -0.5 * p2}}},
        {k + 1, {{0, -2.0 * p2}, {-1, 2.0 * p2}, {0, 0.5 * p2}, {-2, -0.5 * p2}}},
        {k + 2, {{0, 0.5 * p2}, {-2, -0.5 * p2}}},
    };
  } else if (model == Model::qnl) {
    // The two quasi-nonlocal rows swap one second-neighbor interaction for a
    // nearest-neighbor continuum bond.
    corrections = {
        {k, {{2, p2}, {1, -2.0 * p2}, {0, p2}}},
        {k + 1, {{0, -p2}, {-1, 2.0 * p2}, {-2, -p2}}},
    };
  }
  for (const auto& [row, terms] : corrections) {
    for (const auto& t : terms) op.add(row, t.offset, t.value * ih2);
    for (const auto& t : terms) op.add(-row, -t.offset, t.value * ih2);
  }

  detail::validate_operator(op);
  return op;
}

/// Spurious interface forcing of the QCE operator under uniform strain:
/// g_{K-1} = -phi'_2F/2h, g_K = g_{K+1} = +phi'_2F/2h, g_{K+2} = -phi'_2F/2h,
/// extended by g_{-j} = -g_j, zero elsewhere.
struct GhostVector {
  PeriodicField g;
};

inline GhostVector ghost_vector(const LatticeConfig& lattice, const LinearizedCoeffs& coeffs) {
  PeriodicField g(lattice.n_half);
  const double v = coeffs.phi1_2f / (2.0 * lattice.h);
  const int k = lattice.k_interface;
  const std::array<std::pair<long, double>, 4> entries{{
      {k - 1, -v}, {k, v}, {k + 1, v}, {k + 2, -v}}};
  for (const auto& [j, val] : entries) {
    g.at(j) += val;
    g.at(-j) += -val;
  }
  g.parity = Parity::odd;
  g.mean_zero = true;
  return GhostVector{std::move(g)};
}

namespace detail {

inline double strain1(const PeriodicField& u, long j, double h) {
  return (u(j) - u(j - 1)) / h;
}
inline double strain2(const PeriodicField& u, long j, double h) {
  return (u(j) - u(j - 2)) / h;
}

/// Linearized two-body energy density of one (first, second)-neighbor bond
/// pair, first-order terms included.
inline double bond_pair(const LinearizedCoeffs& c, double e1, double e2) {
  return c.phi1_f * e1 + 0.5 * c.phi2_f * e1 * e1 +
         c.phi1_2f * e2 + 0.5 * c.phi2_2f * e2 * e2;
}

/// Continuum strain energy density W(eps), first-order term included.
inline double cont_density(const LinearizedCoeffs& c, double eps) {
  return (c.phi1_f + 2.0 * c.phi1_2f) * eps +
         0.5 * (c.phi2_f + 4.0 * c.phi2_2f) * eps * eps;
}

/// Per-atom energy from splitting each bond's energy equally between its
/// endpoints.
inline double atom_site_energy(const PeriodicField& u, long j, double h,
                               const LinearizedCoeffs& c) {
  const double right = bond_pair(c, strain1(u, j + 1, h), strain2(u, j + 2, h));
  const double left = bond_pair(c, strain1(u, j, h), strain2(u, j, h));
  return 0.5 * h * (right + left);
}

/// Site energy of the quasi-nonlocal atom at +K: continuum density toward the
/// continuum side, full atomistic half-bonds toward the atomistic side.
inline double qnl_site_energy_k(const PeriodicField& u, long k, double h,
                                const LinearizedCoeffs& c) {
  const double e1 = strain1(u, k + 1, h);
  const double right = (c.phi1_f + 2.0 * c.phi1_2f) * e1 +
                       0.5 * (c.phi2_f + 4.0 * c.phi2_2f) * e1 * e1;
  const double left = bond_pair(c, strain1(u, k, h), strain2(u, k, h));
  return 0.5 * h * (right + left);
}

/// Site energy of the quasi-nonlocal atom at +K+1.
inline double qnl_site_energy_k1(const PeriodicField& u, long k, double h,
                                 const LinearizedCoeffs& c) {
  const double e1 = strain1(u, k + 2, h);
  const double right = (c.phi1_f + 2.0 * c.phi1_2f) * e1 +
                       0.5 * (c.phi2_f + 4.0 * c.phi2_2f) * e1 * e1;
  const double left = bond_pair(c, strain1(u, k + 1, h), strain2(u, k + 1, h));
  return 0.5 * h * (right + left);
}

}  // namespace detail

/// Total model energy of a periodic displacement (additive reference
/// constants removed).  First-order terms are kept throughout: they telescope
/// to zero for the uncoupled models but generate the ghost forcing in QCE.
/// The gradient identity is dE/du_j = h * ((L u)_j - g_j), with g = 0 for
/// every model except QCE.
inline double energy(Model model, const PeriodicField& u, const LatticeConfig& lattice,
                     const LinearizedCoeffs& c) {
  if (u.size() != lattice.size()) {
    throw ConfigError("energy: field length does not match lattice");
  }
  const double h = lattice.h;
  const int n = lattice.n_half;
  const int k = lattice.k_interface;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(lattice.size()) + 4);

  switch (model) {
    case Model::atomistic:
      for (long j = -n + 1; j <= n; ++j) {
        terms.push_back(h * detail::bond_pair(c, detail::strain1(u, j, h),
                                              detail::strain2(u, j, h)));
      }
      break;
    case Model::continuum:
      for (long j = -n + 1; j <= n; ++j) {
        terms.push_back(h * detail::cont_density(c, detail::strain1(u, j, h)));
      }
      break;
    case Model::qce: {
      for (long l = -n + 1; l <= -k - 1; ++l) {
        terms.push_back(h * detail::cont_density(c, detail::strain1(u, l, h)));
      }
      terms.push_back(0.5 * h * detail::cont_density(c, detail::strain1(u, -k, h)));
      for (long j = -k; j <= k; ++j) {
        terms.push_back(detail::atom_site_energy(u, j, h, c));
      }
      terms.push_back(0.5 * h * detail::cont_density(c, detail::strain1(u, k + 1, h)));
      for (long l = k + 2; l <= n; ++l) {
        terms.push_back(h * detail::cont_density(c, detail::strain1(u, l, h)));
      }
      break;
    }
    case Model::qnl: {
      for (long l = -n + 1; l <= -k - 2; ++l) {
        terms.push_back(h * detail::cont_density(c, detail::strain1(u, l, h)));
      }
      terms.push_back(0.5 * h * detail::cont_density(c, detail::strain1(u, -k - 1, h)));
      // sites -K-1 and -K are the involution images of +K+1 and +K
      const PeriodicField su = apply_involution(u);
      terms.push_back(detail::qnl_site_energy_k1(su, k, h, c));
      terms.push_back(detail::qnl_site_energy_k(su, k, h, c));
      for (long j = -k + 1; j <= k - 1; ++j) {
        terms.push_back(detail::atom_site_energy(u, j, h, c));
      }
      terms.push_back(detail::qnl_site_energy_k(u, k, h, c));
      terms.push_back(detail::qnl_site_energy_k1(u, k, h, c));
      terms.push_back(0.5 * h * detail::cont_density(c, detail::strain1(u, k + 2, h)));
      for (long l = k + 3; l <= n; ++l) {
        terms.push_back(h * detail::cont_density(c, detail::strain1(u, l, h)));
      }
      break;
    }
  }
  return compensated_sum(terms);
}

}  // namespace qc1d
