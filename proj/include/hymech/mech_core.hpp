#pragma once

// Forced mechanical systems L = 1/2 v^T M(t,q) v + b(t,q).v - V(t,q) with a
// semibasic external force F(t,q,v), on R x TQ and R x T*Q.
//
// The forced Euler-Lagrange equations use the sign convention
//   d/dt (dL/dv) - dL/dq = -F(t,q,v)
// and the forced Hamiltonian field is
//   dq/dt = dH/dp,   dp/dt = -(dH/dq + F(t,q,dH/dp)).

#include <functional>
#include <string>
#include <vector>

#include "hymech/numerics.hpp"

namespace hymech {

struct TangentState {
  double t = 0.0;
  Vector q;
  Vector v;

  int dim() const { return static_cast<int>(q.size()); }
  /// Throws DimensionError / NonFiniteError.
  void validate() const;
};

struct CotangentState {
  double t = 0.0;
  Vector q;
  Vector p;

  int dim() const { return static_cast<int>(q.size()); }
  void validate() const;
};

struct StateDerivative {
  Vector dq;
  Vector dv_or_dp;
  double dt = 1.0;
};

using MassFn = std::function<Matrix(double t, const Vector& q)>;
using ScalarFn = std::function<double(double t, const Vector& q)>;
using CovectorFn = std::function<Vector(double t, const Vector& q)>;
using ForceFn = std::function<Vector(double t, const Vector& q, const Vector& v)>;
using MassPartialsFn = std::function<std::vector<Matrix>(double t, const Vector& q)>;

struct MechanicalSystem {
  int n = 0;
  MassFn mass;
  ScalarFn potential;
  ForceFn force;  // F^L_i(t,q,v); empty means no force
  std::vector<std::string> coordinate_labels;
  bool time_dependent = false;

  // Optional analytic derivatives. Central differences of the base evaluators
  // are used for any that are left empty.
  MassPartialsFn mass_dq;  // [k] = dM/dq^k
  MassFn mass_dt;
  CovectorFn potential_dq;

  // Optional velocity-linear term b(t,q).v. Only Routh reduction produces one.
  CovectorFn linear;
  std::function<Matrix(double t, const Vector& q)> linear_dq;  // (i,k) = db_i/dq^k
  CovectorFn linear_dt;

  void validate() const;
};

// --- evaluation helpers -----------------------------------------------------

/// M(t,q) after symmetry and finiteness checks.
Matrix mass_matrix(const MechanicalSystem& sys, double t, const Vector& q,
                   const NumericsConfig& cfg = {});
/// Solves M x = rhs via Cholesky; SingularMetricError when cond(M) > cfg.cond_cap.
Vector solve_mass(const Matrix& m, const Vector& rhs, const NumericsConfig& cfg = {});

std::vector<Matrix> mass_partials_q(const MechanicalSystem& sys, double t, const Vector& q,
                                    const NumericsConfig& cfg = {});
Matrix mass_partial_t(const MechanicalSystem& sys, double t, const Vector& q,
                      const NumericsConfig& cfg = {});
Vector potential_gradient(const MechanicalSystem& sys, double t, const Vector& q,
                          const NumericsConfig& cfg = {});
Vector linear_term(const MechanicalSystem& sys, double t, const Vector& q);
Vector force_at(const MechanicalSystem& sys, double t, const Vector& q, const Vector& v);

/// dL/dq at (t,q,v).
Vector lagrangian_dq(const MechanicalSystem& sys, const TangentState& s,
                     const NumericsConfig& cfg = {});

// --- operations -------------------------------------------------------------

double eval_lagrangian(const MechanicalSystem& sys, const TangentState& s);
double energy(const MechanicalSystem& sys, const TangentState& s);
/// H(t,q,p).
double eval_hamiltonian(const MechanicalSystem& sys, const CotangentState& s,
                        const NumericsConfig& cfg = {});

CotangentState legendre_forward(const MechanicalSystem& sys, const TangentState& s);
TangentState legendre_inverse(const MechanicalSystem& sys, const CotangentState& s,
                              const NumericsConfig& cfg = {});

StateDerivative forced_el_field(const MechanicalSystem& sys, const TangentState& s,
                                const NumericsConfig& cfg = {});
StateDerivative forced_hamiltonian_field(const MechanicalSystem& sys, const CotangentState& s,
                                         const NumericsConfig& cfg = {});

}  // namespace hymech
