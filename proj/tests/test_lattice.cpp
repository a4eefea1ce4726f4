#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "qc1d/lattice.hpp"
#include "support/oracles.hpp"

using namespace qc1d;

TEST_CASE("lattice config validates its invariants", "[lattice]") {
  const LatticeConfig lat(8, 3, 1.0);
  CHECK(lat.h * lat.n_half == 1.0);
  CHECK(lat.size() == 16);
  CHECK(lat.x(3) == Catch::Approx(0.375));
  CHECK(lat.x_interface_mid() == Catch::Approx(3.5 / 8.0));

  CHECK_THROWS_AS(LatticeConfig(8, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(LatticeConfig(8, 7, 1.0), ConfigError);
  CHECK_THROWS_AS(LatticeConfig(8, 3, 0.0), ConfigError);
  CHECK_THROWS_AS(LatticeConfig(8, 3, -1.0), ConfigError);
  CHECK_NOTHROW(LatticeConfig(8, 6, 2.5));  // K = N-2 is the upper edge
}

TEST_CASE("periodic access wraps with period 2N", "[lattice]") {
  std::mt19937_64 rng(7);
  PeriodicField u = test::random_field(4, rng);
  for (long j = -3; j <= 4; ++j) {
    CHECK(u(j) == u(j + 8));
    CHECK(u(j) == u(j - 8));
    CHECK(u(j) == u(j + 40));
  }
  // slot convention: slot i holds j = i - N + 1
  CHECK(u.slot(-3) == 0);
  CHECK(u.slot(4) == 7);
}

TEST_CASE("backward difference annihilates constants", "[lattice]") {
  const LatticeConfig lat(8, 3, 1.0);
  for (double c : {0.0, 1.0, -17.5, 3.25e6}) {
    PeriodicField u(8);
    for (double& v : u.raw()) v = c;
    const PeriodicField du = backward_difference(u, lat);
    CHECK(norm_linf(du) == 0.0);
  }
}

TEST_CASE("backward difference matches the defining formula", "[lattice]") {
  // odd ramp sampled on one period: N=2, h=0.5, values at j=-1..2
  PeriodicField u(2);
  u.at(-1) = -0.5;
  u.at(0) = 0.0;
  u.at(1) = 0.5;
  u.at(2) = 0.0;
  const PeriodicField du = backward_difference(u, 0.5);
  CHECK(du(2) == Catch::Approx(-1.0));
  CHECK(du(0) == Catch::Approx(1.0));
}

TEST_CASE("backward difference equals dense circulant product", "[lattice]") {
  const LatticeConfig lat(8, 3, 1.0);
  std::mt19937_64 rng(11);
  const PeriodicField u = test::random_field(8, rng);
  const PeriodicField du = backward_difference(u, lat);
  const Eigen::VectorXd ref = test::dense_difference_matrix(lat) * test::field_to_vec(u);
  for (std::size_t i = 0; i < du.raw().size(); ++i) {
    CHECK(du.raw()[i] == Catch::Approx(ref(static_cast<Eigen::Index>(i))).margin(1e-12));
  }
}

TEST_CASE("backward difference rejects mismatched lattice", "[lattice]") {
  const LatticeConfig lat(8, 3, 1.0);
  PeriodicField u(4);
  CHECK_THROWS_AS(backward_difference(u, lat), ConfigError);
}

TEST_CASE("lp norms of constants", "[lattice]") {
  for (int n : {2, 8, 64}) {
    PeriodicField u(n);
    for (double& v : u.raw()) v = 1.0;
    const double h = 1.0 / n;
    for (double p : {1.0, 2.0, 3.0, 7.5}) {
      CHECK(norm_lp(u, p, h) == Catch::Approx(std::pow(2.0, 1.0 / p)).epsilon(1e-13));
    }
    CHECK(norm_lp(u, 2.0, h) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(norm_linf(u) == 1.0);
  }
}

TEST_CASE("lp norm matches high-precision reference", "[lattice]") {
  std::mt19937_64 rng(23);
  const PeriodicField u = test::random_field(8, rng);
  const double h = 1.0 / 8.0;
  for (double p : {1.0, 2.0, 3.0}) {
    CHECK(norm_lp(u, p, h) == Catch::Approx(test::norm_lp_reference(u, p, h)).epsilon(1e-14));
  }
}

TEST_CASE("lp norm rejects p < 1", "[lattice]") {
  PeriodicField u(4);
  CHECK_THROWS_AS(norm_lp(u, 0.5, 0.25), std::domain_error);
  CHECK_THROWS_AS(norm_lp(u, -2.0, 0.25), std::domain_error);
}

TEST_CASE("norm enum dispatch agrees with norm_lp", "[lattice]") {
  std::mt19937_64 rng(5);
  const PeriodicField u = test::random_field(16, rng);
  const double h = 1.0 / 16.0;
  CHECK(norm(u, Norm::l1, h) == norm_lp(u, 1.0, h));
  CHECK(norm(u, Norm::l2, h) == norm_lp(u, 2.0, h));
  CHECK(norm(u, Norm::linf, h) == norm_linf(u));
}

TEST_CASE("involution fixes odd fields and is an exact involution", "[lattice]") {
  std::mt19937_64 rng(3);
  const PeriodicField odd = test::random_odd_field(8, rng);
  const PeriodicField sodd = apply_involution(odd);
  for (std::size_t i = 0; i < odd.raw().size(); ++i) {
    CHECK(sodd.raw()[i] == odd.raw()[i]);
  }

  PeriodicField ones(8);
  for (double& v : ones.raw()) v = 1.0;
  const PeriodicField sones = apply_involution(ones);
  for (double v : sones.raw()) CHECK(v == -1.0);

  const PeriodicField u = test::random_field(4, rng);
  const PeriodicField uss = apply_involution(apply_involution(u));
  for (std::size_t i = 0; i < u.raw().size(); ++i) {
    CHECK(uss.raw()[i] == u.raw()[i]);  // bit exact
  }
}

TEST_CASE("mean-zero projection", "[lattice]") {
  PeriodicField u(2);
  for (double& v : u.raw()) v = 5.0;
  const PeriodicField p = project_mean_zero(u);
  CHECK(norm_linf(p) == 0.0);
  CHECK(p.mean_zero);

  PeriodicField w(2);
  w.at(-1) = 1.0;
  w.at(0) = 2.0;
  w.at(1) = 3.0;
  w.at(2) = 4.0;
  const PeriodicField pw = project_mean_zero(w);
  CHECK(pw(-1) == Catch::Approx(-1.5));
  CHECK(pw(0) == Catch::Approx(-0.5));
  CHECK(pw(1) == Catch::Approx(0.5));
  CHECK(pw(2) == Catch::Approx(1.5));

  // idempotence to machine precision
  const PeriodicField pp = project_mean_zero(pw);
  for (std::size_t i = 0; i < pw.raw().size(); ++i) {
    CHECK(pp.raw()[i] == Catch::Approx(pw.raw()[i]).margin(1e-15));
  }
}

TEST_CASE("check_flags audits advisory markers", "[lattice]") {
  std::mt19937_64 rng(9);
  PeriodicField odd = test::random_odd_field(8, rng);
  odd.mean_zero = true;
  CHECK(check_flags(odd));
  odd.at(3) += 0.5;  // break oddness and the mean
  CHECK_FALSE(check_flags(odd));
  odd.parity = Parity::none;
  odd.mean_zero = false;
  CHECK(check_flags(odd));
}

TEST_CASE("summation by parts with periodic index shift", "[lattice]") {
  std::mt19937_64 rng(31);
  for (int n : {4, 8, 16}) {
    const LatticeConfig lat(n, 2, 1.0);
    const PeriodicField u = test::random_field(n, rng);
    const PeriodicField v = test::random_field(n, rng);
    const PeriodicField du = backward_difference(u, lat);
    const PeriodicField dv = backward_difference(v, lat);
    double lhs = 0.0, rhs = 0.0;
    for (long j = -n + 1; j <= n; ++j) {
      lhs += lat.h * du(j) * v(j);
      rhs += -lat.h * u(j) * dv(j + 1);
    }
    CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("discrete mean-zero Poincare inequality", "[lattice]") {
  std::mt19937_64 rng(101);
  for (int n : {8, 32, 128}) {
    const LatticeConfig lat(n, 2, 1.0);
    const double factor = lat.h / (2.0 * std::sin(std::numbers::pi * lat.h / 2.0));
    REQUIRE(factor <= 0.5 + 1e-15);
    for (int t = 0; t < 100; ++t) {
      const PeriodicField u = test::random_mean_zero_field(n, rng);
      const PeriodicField du = backward_difference(u, lat);
      const double lu = norm_lp(u, 2.0, lat.h);
      const double ld = norm_lp(du, 2.0, lat.h);
      CHECK(lu <= factor * ld * (1.0 + 1e-12));
      CHECK(factor * ld <= 0.5 * ld * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("odd-field Poincare chain", "[lattice]") {
  std::mt19937_64 rng(55);
  for (int n : {8, 32}) {
    const LatticeConfig lat(n, 2, 1.0);
    for (int t = 0; t < 50; ++t) {
      const PeriodicField u = test::random_odd_field(n, rng);
      const PeriodicField du = backward_difference(u, lat);
      CHECK(norm_linf(u) <= norm_lp(du, 1.0, lat.h) * (1.0 + 1e-12));
      CHECK(norm_lp(du, 1.0, lat.h) <=
            std::sqrt(2.0) * norm_lp(du, 2.0, lat.h) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("Holder chain and inverse estimate for differences", "[lattice]") {
  std::mt19937_64 rng(77);
  for (int n : {8, 32}) {
    const LatticeConfig lat(n, 2, 1.0);
    for (int t = 0; t < 25; ++t) {
      const PeriodicField u = test::random_field(n, rng);
      const PeriodicField du = backward_difference(u, lat);
      const double l2 = norm_lp(du, 2.0, lat.h);
      const double linf = norm_linf(du);
      for (double p : {1.0, 1.5, 2.0}) {
        CHECK(norm_lp(du, p, lat.h) <=
              std::pow(2.0, (2.0 - p) / (2.0 * p)) * l2 * (1.0 + 1e-12));
      }
      for (double p : {2.0, 3.0, 6.0}) {
        CHECK(norm_lp(du, p, lat.h) <=
              std::pow(l2, 2.0 / p) * std::pow(linf, 1.0 - 2.0 / p) * (1.0 + 1e-12));
      }
      CHECK(linf <= std::pow(lat.h, -0.5) * l2 * (1.0 + 1e-12));
    }
  }
}
