#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's field evaluators; only L and F are evaluated.

#include <cmath>
#include <random>

#include "hymech/mech_core.hpp"

namespace oracle {

using hymech::Matrix;
using hymech::MechanicalSystem;
using hymech::TangentState;
using hymech::Vector;

// Fourth-order central difference of a scalar function along one direction.
template <class F>
double d4(F&& f, double h) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

inline double lagrangian(const MechanicalSystem& sys, double t, const Vector& q, const Vector& v) {
  const Matrix m = sys.mass(t, q);
  double l = 0.5 * v.dot(m * v) - sys.potential(t, q);
  if (sys.linear) l += sys.linear(t, q).dot(v);
  return l;
}

/// dL/dv_i computed by differencing L in v.
inline double dl_dv(const MechanicalSystem& sys, double t, const Vector& q, const Vector& v, int i,
                    double h) {
  return d4([&](double d) {
    Vector w = v;
    w[i] += d;
    return lagrangian(sys, t, q, w);
  }, h);
}

/// Acceleration solving d/dt dL/dv - dL/dq = -F with every derivative of L
/// taken by nested finite differences.
inline Vector el_acceleration(const MechanicalSystem& sys, const TangentState& s, double h = 1e-3) {
  const int n = s.dim();
  Matrix hess(n, n);
  Matrix mixed(n, n);  // (i, j) = d2L / dv_i dq_j
  Vector mixed_t(n), dl_dq(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      hess(i, j) = d4([&](double d) {
        Vector w = s.v;
        w[j] += d;
        return dl_dv(sys, s.t, s.q, w, i, h);
      }, h);
      mixed(i, j) = d4([&](double d) {
        Vector q = s.q;
        q[j] += d;
        return dl_dv(sys, s.t, q, s.v, i, h);
      }, h);
    }
    mixed_t[i] = d4([&](double d) { return dl_dv(sys, s.t + d, s.q, s.v, i, h); }, h);
    dl_dq[i] = d4([&](double d) {
      Vector q = s.q;
      q[i] += d;
      return lagrangian(sys, s.t, q, s.v);
    }, h);
  }
  Vector f = sys.force ? sys.force(s.t, s.q, s.v) : Vector(Vector::Zero(n));
  const Vector rhs = dl_dq - mixed * s.v - mixed_t - f;
  return hess.fullPivLu().solve(rhs);
}

inline double relative_error(const Vector& a, const Vector& ref) {
  return (a - ref).norm() / std::max(1.0, ref.norm());
}

/// A smooth, configuration- and time-dependent SPD mass matrix with a
/// velocity-dependent force and a non-trivial potential, without analytic derivatives.
inline MechanicalSystem random_system(int n, std::mt19937_64& rng, bool time_dependent = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix a0(n, n), a1(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a0(i, j) = g(rng);
      a1(i, j) = 0.3 * g(rng);
    }
  Vector w(n), k(n);
  for (int i = 0; i < n; ++i) {
    w[i] = g(rng);
    k[i] = 0.5 + std::abs(g(rng));
  }
  const double tw = time_dependent ? 0.4 : 0.0;
  MechanicalSystem sys;
  sys.n = n;
  sys.time_dependent = time_dependent;
  sys.mass = [=](double t, const Vector& q) {
    const Matrix b = a0 + a1 * std::sin(q.dot(w) + tw * t);
    return Matrix(b * b.transpose() + n * Matrix::Identity(n, n));
  };
  sys.potential = [=](double t, const Vector& q) {
    return 0.5 * q.dot(k.asDiagonal() * q) + 0.1 * std::cos(q.sum()) * (1.0 + tw * t);
  };
  sys.force = [=](double, const Vector& q, const Vector& v) {
    return Vector(0.2 * v + 0.05 * q.squaredNorm() * v.cwiseProduct(w));
  };
  for (int i = 0; i < n; ++i) sys.coordinate_labels.push_back("q" + std::to_string(i));
  return sys;
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace oracle
