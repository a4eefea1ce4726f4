#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qc1d/errors.hpp"

namespace qc1d {

/// Neumaier-compensated summation.  Norm comparisons in the test suites run
/// at 1e-12 for lattices up to N = 4096, which plain left-to-right
/// accumulation does not reliably support.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

/// Periodic reference lattice with 2N atoms per period, spacing h = 1/N, and
/// an atomistic window |j| <= K around the origin.  Owns all index
/// conventions; every other module speaks lattice index j in [-N+1, N].
struct LatticeConfig {
  int n_half;       ///< N: atoms per half-period; fields have length 2N
  int k_interface;  ///< K: atomistic region half-width
  double h;         ///< reference spacing, exactly 1.0/N
  double strain;    ///< F: uniform deformation gradient, > 0

  LatticeConfig(int n, int k, double f)
      : n_half(n), k_interface(k), h(0.0), strain(f) {
    if (n < 4) {
      throw ConfigError("n_half must be at least 4, got " + std::to_string(n));
    }
    if (k < 2 || k > n - 2) {
      throw ConfigError("k_interface must satisfy 2 <= K <= N-2, got K=" +
                        std::to_string(k) + " with N=" + std::to_string(n));
    }
    if (!(f > 0.0)) {
      throw ConfigError("strain must be positive, got " + std::to_string(f));
    }
    h = 1.0 / static_cast<double>(n);
  }

  int size() const { return 2 * n_half; }
  double x(long j) const { return static_cast<double>(j) * h; }
  /// Midpoint x_{K+1/2} of the interface bond; interface Taylor expansions
  /// are centered here.
  double x_interface_mid() const { return (k_interface + 0.5) * h; }
};

enum class Parity : std::uint8_t { none, odd };

/// A real field on one lattice period, indexed j = -N+1 .. N with periodic
/// extension u_{j+2N} = u_j.  Slot i of the backing array stores index
/// j = i - N + 1.  The parity/mean-zero markers are advisory: they are not
/// enforced on writes (that would cost O(N) per mutation) and can be audited
/// with check_flags().
class PeriodicField {
 public:
  explicit PeriodicField(int n_half) : n_half_(n_half) {
    if (n_half < 1) {
      throw ConfigError("field length must be positive, got N=" + std::to_string(n_half));
    }
    values_.assign(static_cast<std::size_t>(2 * n_half), 0.0);
  }

  int n_half() const { return n_half_; }
  int size() const { return 2 * n_half_; }

  /// Periodic access by lattice index (any integer j).
  double operator()(long j) const { return values_[slot(j)]; }
  double& at(long j) { return values_[slot(j)]; }

  std::span<const double> raw() const { return values_; }
  std::span<double> raw() { return values_; }

  std::size_t slot(long j) const {
    long m = (j + n_half_ - 1) % (2L * n_half_);
    if (m < 0) m += 2L * n_half_;
    return static_cast<std::size_t>(m);
  }
  long index_of_slot(std::size_t i) const {
    return static_cast<long>(i) - n_half_ + 1;
  }

  Parity parity = Parity::none;
  bool mean_zero = false;

 private:
  int n_half_;
  std::vector<double> values_;
};

inline double field_sum(const PeriodicField& u) { return compensated_sum(u.raw()); }

inline double field_mean(const PeriodicField& u) {
  return field_sum(u) / static_cast<double>(u.size());
}

inline double max_abs(const PeriodicField& u) {
  double m = 0.0;
  for (double v : u.raw()) m = std::max(m, std::abs(v));
  return m;
}

/// Audit the advisory parity / mean-zero markers against the stored values.
/// Returns false when a set flag is inconsistent with the data.
inline bool check_flags(const PeriodicField& u) {
  if (u.parity == Parity::odd) {
    const double tol = 1e-12 * std::max(1.0, max_abs(u));
    for (long j = 0; j <= u.n_half(); ++j) {
      if (std::abs(u(j) + u(-j)) > tol) return false;
    }
  }
  if (u.mean_zero) {
    const double eps = std::numeric_limits<double>::epsilon();
    if (std::abs(field_sum(u)) > static_cast<double>(u.size()) * eps * std::max(1.0, max_abs(u))) {
      return false;
    }
  }
  return true;
}

/// Backward difference (Du)_j = (u_j - u_{j-1})/h, periodic.  D of an odd
/// field is even, so the parity marker of the result is cleared.
inline PeriodicField backward_difference(const PeriodicField& u, double h) {
  PeriodicField out(u.n_half());
  for (std::size_t i = 0; i < u.raw().size(); ++i) {
    const long j = out.index_of_slot(i);
    out.at(j) = (u(j) - u(j - 1)) / h;
  }
  return out;
}

inline PeriodicField backward_difference(const PeriodicField& u, const LatticeConfig& lattice) {
  if (u.size() != lattice.size()) {
    throw ConfigError("backward_difference: field has length " + std::to_string(u.size()) +
                      " but lattice expects " + std::to_string(lattice.size()));
  }
  return backward_difference(u, lattice.h);
}

/// Discrete l^p norm (h * sum |u_j|^p)^(1/p) over one full period, p >= 1.
inline double norm_lp(const PeriodicField& u, double p, double h) {
  if (!(p >= 1.0)) {
    throw std::domain_error("norm_lp: p must satisfy p >= 1, got " + std::to_string(p));
  }
  std::vector<double> terms(u.raw().size());
  if (p == 1.0) {
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::abs(u.raw()[i]);
  } else if (p == 2.0) {
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = u.raw()[i] * u.raw()[i];
  } else {
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = std::pow(std::abs(u.raw()[i]), p);
  }
  return std::pow(h * compensated_sum(terms), 1.0 / p);
}

inline double norm_linf(const PeriodicField& u) { return max_abs(u); }

/// Norm selector used by reports; infinity is a distinct enumerator rather
/// than a sentinel float.
enum class Norm { l1, l2, linf };

inline double norm(const PeriodicField& u, Norm which, double h) {
  switch (which) {
    case Norm::l1: return norm_lp(u, 1.0, h);
    case Norm::l2: return norm_lp(u, 2.0, h);
    case Norm::linf: return norm_linf(u);
  }
  return 0.0;
}

/// Involution (Su)_j = -u_{-j}.  Exact (negation only); applying twice
/// reproduces the input bit for bit.
inline PeriodicField apply_involution(const PeriodicField& u) {
  PeriodicField out(u.n_half());
  for (std::size_t i = 0; i < u.raw().size(); ++i) {
    const long j = out.index_of_slot(i);
    out.at(j) = -u(-j);
  }
  out.parity = u.parity;
  out.mean_zero = u.mean_zero;
  return out;
}

/// Subtract the mean; the result carries the mean-zero marker.
inline PeriodicField project_mean_zero(const PeriodicField& u) {
  const double m = field_mean(u);
  PeriodicField out = u;
  for (double& v : out.raw()) v -= m;
  out.mean_zero = true;
  return out;
}

/// h-weighted inner product h * sum u_j v_j, compensated.
inline double weighted_dot(const PeriodicField& u, const PeriodicField& v, double h) {
  std::vector<double> terms(u.raw().size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = u.raw()[i] * v.raw()[i];
  return h * compensated_sum(terms);
}

}  // namespace qc1d
