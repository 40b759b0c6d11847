#include "hymech/mech_core.hpp"

#include <cmath>
#include <sstream>

namespace hymech {

void NumericsConfig::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw ValidationError(std::string("numerics.") + field + " must be positive");
  };
  require(rel_tol > 0.0, "rel_tol");
  require(abs_tol > 0.0, "abs_tol");
  require(event_tol > 0.0, "event_tol");
  require(zeno_gap > 0.0, "zeno_gap");
  require(max_impacts > 0, "max_impacts");
  require(fd_step > 0.0, "fd_step");
  require(max_bisections > 0, "max_bisections");
  require(cond_cap > 0.0, "cond_cap");
  require(max_step > 0.0, "max_step");
  if (rel_tol < abs_tol * 1e-6) throw ValidationError("numerics.rel_tol must be >= abs_tol*1e-6");
}

namespace {

void check_pair(const Vector& q, const Vector& w, const char* what) {
  if (q.size() < 1) throw DimensionError(std::string(what) + ": configuration dimension must be >= 1");
  if (q.size() != w.size()) {
    std::ostringstream os;
    os << what << ": q has length " << q.size() << " but fiber has length " << w.size();
    throw DimensionError(os.str());
  }
}

void check_state(const MechanicalSystem& sys, const Vector& q, const Vector& w) {
  if (q.size() != sys.n || w.size() != sys.n) {
    std::ostringstream os;
    os << "state dimension " << q.size() << "/" << w.size() << " does not match system dimension "
       << sys.n;
    throw DimensionError(os.str());
  }
  if (!q.allFinite() || !w.allFinite()) throw NonFiniteError("state has non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NonFiniteError(std::string("non-finite ") + what);
}

}  // namespace

void TangentState::validate() const {
  check_pair(q, v, "TangentState");
  if (!std::isfinite(t) || !q.allFinite() || !v.allFinite())
    throw NonFiniteError("TangentState has non-finite entries");
}

void CotangentState::validate() const {
  check_pair(q, p, "CotangentState");
  if (!std::isfinite(t) || !q.allFinite() || !p.allFinite())
    throw NonFiniteError("CotangentState has non-finite entries");
}

void MechanicalSystem::validate() const {
  if (n < 1) throw ValidationError("MechanicalSystem.n must be >= 1");
  if (!mass) throw ValidationError("MechanicalSystem.mass evaluator missing");
  if (!potential) throw ValidationError("MechanicalSystem.potential evaluator missing");
  if (!coordinate_labels.empty() && static_cast<int>(coordinate_labels.size()) != n)
    throw ValidationError("MechanicalSystem.coordinate_labels must have n entries");
}

Matrix mass_matrix(const MechanicalSystem& sys, double t, const Vector& q,
                   const NumericsConfig& /*cfg*/) {
  Matrix m = sys.mass(t, q);
  if (m.rows() != sys.n || m.cols() != sys.n) throw DimensionError("mass matrix has wrong shape");
  if (!m.allFinite()) throw NonFiniteError("non-finite mass matrix");
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
    throw SingularMetricError("mass matrix is not symmetric");
  return m;
}

Vector solve_mass(const Matrix& m, const Vector& rhs, const NumericsConfig& cfg) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw SingularMetricError("mass matrix is not positive-definite");
  if (llt.rcond() * cfg.cond_cap < 1.0) throw SingularMetricError("mass matrix is numerically singular");
  return llt.solve(rhs);
}

std::vector<Matrix> mass_partials_q(const MechanicalSystem& sys, double t, const Vector& q,
                                    const NumericsConfig& cfg) {
  if (sys.mass_dq) return sys.mass_dq(t, q);
  std::vector<Matrix> out;
  out.reserve(sys.n);
  Vector qp = q;
  for (int k = 0; k < sys.n; ++k) {
    const double h = fd_step_for(q[k], cfg.fd_step);
    qp[k] = q[k] + h;
    Matrix plus = sys.mass(t, qp);
    qp[k] = q[k] - h;
    Matrix minus = sys.mass(t, qp);
    qp[k] = q[k];
    out.push_back((plus - minus) / (2.0 * h));
  }
  return out;
}

Matrix mass_partial_t(const MechanicalSystem& sys, double t, const Vector& q,
                      const NumericsConfig& cfg) {
  if (!sys.time_dependent) return Matrix::Zero(sys.n, sys.n);
  if (sys.mass_dt) return sys.mass_dt(t, q);
  const double h = fd_step_for(t, cfg.fd_step);
  return (sys.mass(t + h, q) - sys.mass(t - h, q)) / (2.0 * h);
}

Vector potential_gradient(const MechanicalSystem& sys, double t, const Vector& q,
                          const NumericsConfig& cfg) {
  if (sys.potential_dq) return sys.potential_dq(t, q);
  Vector g(sys.n);
  Vector qp = q;
  for (int k = 0; k < sys.n; ++k) {
    const double h = fd_step_for(q[k], cfg.fd_step);
    qp[k] = q[k] + h;
    const double plus = sys.potential(t, qp);
    qp[k] = q[k] - h;
    const double minus = sys.potential(t, qp);
    qp[k] = q[k];
    g[k] = (plus - minus) / (2.0 * h);
  }
  return g;
}

Vector linear_term(const MechanicalSystem& sys, double t, const Vector& q) {
  if (!sys.linear) return Vector::Zero(sys.n);
  return sys.linear(t, q);
}

namespace {

Matrix linear_jacobian(const MechanicalSystem& sys, double t, const Vector& q,
                       const NumericsConfig& cfg) {
  if (!sys.linear) return Matrix::Zero(sys.n, sys.n);
  if (sys.linear_dq) return sys.linear_dq(t, q);
  Matrix d(sys.n, sys.n);
  Vector qp = q;
  for (int k = 0; k < sys.n; ++k) {
    const double h = fd_step_for(q[k], cfg.fd_step);
    qp[k] = q[k] + h;
    Vector plus = sys.linear(t, qp);
    qp[k] = q[k] - h;
    Vector minus = sys.linear(t, qp);
    qp[k] = q[k];
    d.col(k) = (plus - minus) / (2.0 * h);
  }
  return d;
}

Vector linear_partial_t(const MechanicalSystem& sys, double t, const Vector& q,
                        const NumericsConfig& cfg) {
  if (!sys.linear || !sys.time_dependent) return Vector::Zero(sys.n);
  if (sys.linear_dt) return sys.linear_dt(t, q);
  const double h = fd_step_for(t, cfg.fd_step);
  return (sys.linear(t + h, q) - sys.linear(t - h, q)) / (2.0 * h);
}

}  // namespace

Vector force_at(const MechanicalSystem& sys, double t, const Vector& q, const Vector& v) {
  if (!sys.force) return Vector::Zero(sys.n);
  Vector f = sys.force(t, q, v);
  if (f.size() != sys.n) throw DimensionError("force evaluator returned a covector of wrong length");
  require_finite(f, "force evaluation");
  return f;
}

Vector lagrangian_dq(const MechanicalSystem& sys, const TangentState& s, const NumericsConfig& cfg) {
  const auto dm = mass_partials_q(sys, s.t, s.q, cfg);
  Vector g = -potential_gradient(sys, s.t, s.q, cfg);
  for (int i = 0; i < sys.n; ++i) g[i] += 0.5 * s.v.dot(dm[i] * s.v);
  if (sys.linear) g += linear_jacobian(sys, s.t, s.q, cfg).transpose() * s.v;
  return g;
}

double eval_lagrangian(const MechanicalSystem& sys, const TangentState& s) {
  check_state(sys, s.q, s.v);
  const Matrix m = mass_matrix(sys, s.t, s.q);
  const double value = 0.5 * s.v.dot(m * s.v) + linear_term(sys, s.t, s.q).dot(s.v) -
                       sys.potential(s.t, s.q);
  if (!std::isfinite(value)) throw NonFiniteError("non-finite Lagrangian");
  return value;
}

double energy(const MechanicalSystem& sys, const TangentState& s) {
  check_state(sys, s.q, s.v);
  const Matrix m = mass_matrix(sys, s.t, s.q);
  const double value = 0.5 * s.v.dot(m * s.v) + sys.potential(s.t, s.q);
  if (!std::isfinite(value)) throw NonFiniteError("non-finite energy");
  return value;
}

double eval_hamiltonian(const MechanicalSystem& sys, const CotangentState& s,
                        const NumericsConfig& cfg) {
  return energy(sys, legendre_inverse(sys, s, cfg));
}

CotangentState legendre_forward(const MechanicalSystem& sys, const TangentState& s) {
  check_state(sys, s.q, s.v);
  Vector p = mass_matrix(sys, s.t, s.q) * s.v + linear_term(sys, s.t, s.q);
  require_finite(p, "momentum");
  return {s.t, s.q, std::move(p)};
}

TangentState legendre_inverse(const MechanicalSystem& sys, const CotangentState& s,
                              const NumericsConfig& cfg) {
  check_state(sys, s.q, s.p);
  const Matrix m = mass_matrix(sys, s.t, s.q, cfg);
  Vector v = solve_mass(m, s.p - linear_term(sys, s.t, s.q), cfg);
  require_finite(v, "velocity");
  return {s.t, s.q, std::move(v)};
}

StateDerivative forced_el_field(const MechanicalSystem& sys, const TangentState& s,
                                const NumericsConfig& cfg) {
  check_state(sys, s.q, s.v);
  const Matrix m = mass_matrix(sys, s.t, s.q, cfg);
  const auto dm = mass_partials_q(sys, s.t, s.q, cfg);

  // M a = dL/dq - F - (dM/dt) v - sum_k v_k (dM/dq^k) v - db/dt - (Db) v
  Vector rhs = -potential_gradient(sys, s.t, s.q, cfg) - force_at(sys, s.t, s.q, s.v);
  Matrix mdot = mass_partial_t(sys, s.t, s.q, cfg);
  for (int k = 0; k < sys.n; ++k) {
    rhs[k] += 0.5 * s.v.dot(dm[k] * s.v);
    mdot += s.v[k] * dm[k];
  }
  rhs -= mdot * s.v;
  if (sys.linear) {
    const Matrix db = linear_jacobian(sys, s.t, s.q, cfg);
    rhs += (db.transpose() - db) * s.v - linear_partial_t(sys, s.t, s.q, cfg);
  }
  require_finite(rhs, "Euler-Lagrange right-hand side");
  return {s.v, solve_mass(m, rhs, cfg), 1.0};
}

StateDerivative forced_hamiltonian_field(const MechanicalSystem& sys, const CotangentState& s,
                                         const NumericsConfig& cfg) {
  check_state(sys, s.q, s.p);
  const Matrix m = mass_matrix(sys, s.t, s.q, cfg);
  const Vector w = solve_mass(m, s.p - linear_term(sys, s.t, s.q), cfg);
  const auto dm = mass_partials_q(sys, s.t, s.q, cfg);

  // dH/dq_i = -(db/dq^i).w - 1/2 w^T (dM/dq^i) w + dV/dq^i
  Vector dh_dq = potential_gradient(sys, s.t, s.q, cfg);
  for (int i = 0; i < sys.n; ++i) dh_dq[i] -= 0.5 * w.dot(dm[i] * w);
  if (sys.linear) dh_dq -= linear_jacobian(sys, s.t, s.q, cfg).transpose() * w;

  Vector dp = -dh_dq - force_at(sys, s.t, s.q, w);
  require_finite(dp, "Hamiltonian field");
  return {w, std::move(dp), 1.0};
}

}  // namespace hymech
