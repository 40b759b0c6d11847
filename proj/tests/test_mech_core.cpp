#include <doctest.h>

#include <cmath>
#include <random>

#include "hymech/engine.hpp"
#include "hymech/hybrid.hpp"
#include "hymech/models.hpp"
#include "oracle.hpp"

using namespace hymech;

namespace {

Vector V(std::initializer_list<double> xs) {
  Vector v(xs.size());
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

MechanicalSystem constant_mass(const Matrix& m, ScalarFn potential = {}) {
  MechanicalSystem sys;
  sys.n = static_cast<int>(m.rows());
  sys.mass = [m](double, const Vector&) { return m; };
  sys.potential = potential ? potential : ScalarFn([](double, const Vector&) { return 0.0; });
  return sys;
}

MechanicalSystem free_particle(int n = 1) { return constant_mass(Matrix::Identity(n, n)); }

models::Model disk(double m, double k, double c = 0.1) {
  models::DiskParams p;
  p.m = m;
  p.k = k;
  p.c = c;
  return models::build_rolling_disk(p);
}

models::Model billiard(double m, double c) {
  auto p = models::default_billiard(c);
  p.m = m;
  return models::build_billiard(p);
}

}  // namespace

TEST_CASE("lagrangian and energy of simple systems") {
  const auto fp = free_particle();
  CHECK(eval_lagrangian(fp, {0.0, V({0.3}), V({2.0})}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(energy(fp, {0.0, V({0.3}), V({2.0})}) == doctest::Approx(2.0).epsilon(1e-15));

  const auto pot = constant_mass(Matrix::Identity(2, 2), [](double t, const Vector& q) { return q.sum() + t; });
  const TangentState rest{1.5, V({0.2, -0.7}), V({0.0, 0.0})};
  CHECK(eval_lagrangian(pot, rest) == doctest::Approx(-(0.2 - 0.7 + 1.5)));
  CHECK(energy(pot, rest) == doctest::Approx(0.2 - 0.7 + 1.5));

  const auto b = billiard(1.0, 0.1);
  CHECK(eval_lagrangian(b.cartesian.sys, {0.0, V({0.3, 0.4}), V({1.0, 1.0})}) == doctest::Approx(1.0).epsilon(1e-15));

  const auto d = disk(2.0, 1.0);
  CHECK(energy(d.cartesian.sys, {0.0, V({0.1, 1.0, 0.0}), V({1.0, 1.0, 1.0})}) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("legendre transform examples") {
  const auto d = disk(1.0, 1.0);
  const auto p = legendre_forward(d.cartesian.sys, {0.0, V({0.1, 1.0, 0.0}), V({2.0, 3.0, 4.0})});
  CHECK((p.p - V({2.0, 3.0, 4.0})).norm() == doctest::Approx(0.0));
  CHECK(legendre_forward(d.cartesian.sys, {0.0, V({0.1, 1.0, 0.0}), V({0.0, 0.0, 0.0})}).p.norm() == 0.0);

  // Billiard with e^{ct/m} = 2: oracle is a central difference of L in v.
  const auto b = billiard(1.0, 0.1);
  const TangentState s{10.0 * std::log(2.0), V({0.2, 0.1}), V({1.0, 0.0})};
  const Vector pb = legendre_forward(b.cartesian.sys, s).p;
  CHECK(pb[0] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(std::abs(pb[1]) < 1e-15);
  for (int i = 0; i < 2; ++i) {
    const double h = 1e-6;
    TangentState sp = s, sm = s;
    sp.v[i] += h;
    sm.v[i] -= h;
    const double fd = (eval_lagrangian(b.cartesian.sys, sp) - eval_lagrangian(b.cartesian.sys, sm)) / (2 * h);
    CHECK(pb[i] == doctest::Approx(fd).epsilon(1e-8));
  }

  Matrix m(2, 2);
  m << 2, 1, 1, 1;
  const auto sys = constant_mass(m);
  const auto v = legendre_inverse(sys, {0.0, V({0.0, 0.0}), V({1.0, 0.0})}).v;
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(-1.0));
  CHECK(legendre_inverse(sys, {0.0, V({0.0, 0.0}), V({0.0, 0.0})}).v.norm() == 0.0);
  CHECK((legendre_inverse(free_particle(3), {0.0, V({0, 0, 0}), V({2, 3, 4})}).v - V({2, 3, 4})).norm() == 0.0);
}

TEST_CASE("singular and malformed mass matrices are rejected") {
  Matrix sing(2, 2);
  sing << 1, 1, 1, 1 + 1e-14;
  CHECK_THROWS_AS(legendre_inverse(constant_mass(sing), {0.0, V({0, 0}), V({1, 0})}), SingularMetricError);
  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  CHECK_THROWS_AS(legendre_inverse(constant_mass(asym), {0.0, V({0, 0}), V({1, 0})}), SingularMetricError);
  CHECK_THROWS_AS(eval_lagrangian(free_particle(2), {0.0, V({0, 0}), V({1})}), DimensionError);
  CHECK_THROWS_AS(eval_lagrangian(free_particle(1), {0.0, V({NAN}), V({1})}), NonFiniteError);
}

TEST_CASE("forced Euler-Lagrange field examples") {
  const auto fp = free_particle(2);
  const auto a = forced_el_field(fp, {0.0, V({1, 2}), V({3, -4})});
  CHECK(a.dv_or_dp.norm() == 0.0);
  CHECK((a.dq - V({3, -4})).norm() == 0.0);
  CHECK(a.dt == 1.0);

  const auto b = billiard(1.0, 1.0);
  const Vector ab = forced_el_field(b.cartesian.sys, {0.0, V({1, 0}), V({0, 1})}).dv_or_dp;
  CHECK(ab[0] == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(ab[1] == doctest::Approx(-1.0).epsilon(1e-14));

  const auto d = disk(1.0, 0.35, 1.0);
  const Vector ad = forced_el_field(d.cartesian.sys, {0.0, V({1, 1, 0}), V({1, 0, 5})}).dv_or_dp;
  CHECK(ad[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ad[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(ad[2] == 0.0);
}

TEST_CASE("forced Hamiltonian field examples") {
  const auto f = forced_hamiltonian_field(free_particle(2), {0.0, V({0, 0}), V({1, 0})});
  CHECK((f.dq - V({1, 0})).norm() == 0.0);
  CHECK(f.dv_or_dp.norm() == 0.0);

  const auto osc = constant_mass(Matrix::Identity(1, 1), [](double, const Vector& q) { return 0.5 * q[0] * q[0]; });
  const auto g = forced_hamiltonian_field(osc, {0.0, V({1}), V({0})});
  CHECK(g.dq[0] == 0.0);
  CHECK(g.dv_or_dp[0] == doctest::Approx(-1.0).epsilon(1e-9));

  std::mt19937_64 rng(7);
  const auto d = disk(1.3, 0.4, 0.2);
  for (int i = 0; i < 50; ++i) {
    const CotangentState s{0.0, oracle::random_vector(3, rng, 2.0), oracle::random_vector(3, rng, 3.0)};
    CHECK(forced_hamiltonian_field(d.cartesian.sys, s).dv_or_dp[2] == 0.0);
  }
}

TEST_CASE("legendre roundtrip and energy identity on random systems") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    const auto sys = oracle::random_system(n, rng);
    const TangentState s{0.3 * trial, oracle::random_vector(n, rng), oracle::random_vector(n, rng, 2.0)};
    const auto p = legendre_forward(sys, s);
    const auto back = legendre_inverse(sys, p);
    CHECK((back.v - s.v).norm() <= 1e-12 * std::max(1.0, s.v.norm()));
    CHECK((back.q - s.q).norm() == 0.0);
    const double e = energy(sys, s);
    CHECK(std::abs(e - (p.p.dot(s.v) - eval_lagrangian(sys, s))) <= 1e-12 * std::max(1.0, std::abs(e)));
    CHECK(std::abs(eval_hamiltonian(sys, p) - e) <= 1e-12 * std::max(1.0, std::abs(e)));
  }
}

TEST_CASE("finite-difference defaults agree with an independent derivation from L") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 3;
    const auto sys = oracle::random_system(n, rng);
    const TangentState s{0.1 * trial, oracle::random_vector(n, rng), oracle::random_vector(n, rng, 2.0)};
    const Vector a = forced_el_field(sys, s).dv_or_dp;
    CHECK(oracle::relative_error(a, oracle::el_acceleration(sys, s)) <= 1e-6);
  }
}

TEST_CASE("Lagrangian and Hamiltonian fields are conjugate") {
  // d/dt (M v) along the Lagrangian field equals dp of the Hamiltonian field.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 3;
    const auto sys = oracle::random_system(n, rng);
    const TangentState s{0.2 * trial, oracle::random_vector(n, rng), oracle::random_vector(n, rng, 2.0)};
    const auto lag = forced_el_field(sys, s);
    const auto ham = forced_hamiltonian_field(sys, legendre_forward(sys, s));
    const double h = 1e-5;
    auto p_along = [&](double d) {
      const TangentState sd{s.t + d, s.q + d * s.v, s.v + d * lag.dv_or_dp};
      return legendre_forward(sys, sd).p;
    };
    const Vector dp = (p_along(h) - p_along(-h)) / (2 * h);
    CHECK((ham.dq - s.v).norm() <= 1e-10 * std::max(1.0, s.v.norm()));
    CHECK(oracle::relative_error(ham.dv_or_dp, dp) <= 1e-6);
  }
}

TEST_CASE("cyclic momentum is conserved along autonomous arcs") {
  const auto d = disk(1.0, 0.35, 0.3);
  NumericsConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  HybridSystem hs{d.polar.sys, {}, true};
  const TangentState s0{0.0, V({1.0, 0.4, 0.0}), V({0.5, 1.2, -2.0})};
  const auto arc = integrate_arc(hs, s0, 1.0, cfg);
  const Vector mu0 = legendre_forward(d.polar.sys, s0).p.tail(2);
  for (const auto& s : arc.arc.samples) {
    const Vector mu = legendre_forward(d.polar.sys, s).p.tail(2);
    CHECK((mu - mu0).cwiseAbs().maxCoeff() <= 1e-8 * mu0.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("numerics configuration validation") {
  NumericsConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.rel_tol = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.rel_tol = 1e-20;
  cfg.abs_tol = 1e-11;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = {};
  cfg.max_impacts = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
