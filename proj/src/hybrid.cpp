#include "hymech/hybrid.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "hymech/engine.hpp"

namespace hymech {

Vector guard_gradient(const Guard& g, double t, const Vector& q, const NumericsConfig& cfg) {
  if (g.gradient) return g.gradient(t, q);
  Vector grad(q.size());
  Vector qp = q;
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    const double h = fd_step_for(q[k], cfg.fd_step);
    qp[k] = q[k] + h;
    const double plus = g.h(t, qp);
    qp[k] = q[k] - h;
    const double minus = g.h(t, qp);
    qp[k] = q[k];
    grad[k] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double guard_time_partial(const Guard& g, double t, const Vector& q, const NumericsConfig& cfg) {
  if (!g.time_dependent) return 0.0;
  if (g.h_dt) return g.h_dt(t, q);
  const double h = fd_step_for(t, cfg.fd_step);
  return (g.h(t + h, q) - g.h(t - h, q)) / (2.0 * h);
}

double guard_approach(const Guard& g, double t, const Vector& q, const Vector& v,
                      const NumericsConfig& cfg) {
  if (g.approach) return g.approach(t, q, v);
  return guard_time_partial(g, t, q, cfg) + guard_gradient(g, t, q, cfg).dot(v);
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::time_horizon_reached:
      return "time_horizon_reached";
    case Termination::zeno_detected:
      return "zeno_detected";
    case Termination::integration_failure:
      return "integration_failure";
  }
  return "unknown";
}

void HybridSystem::validate() const {
  sys.validate();
  if (transitions.empty() && !pure_continuous)
    throw ValidationError("hybrid system needs at least one transition or the pure_continuous flag");
  std::set<std::string> labels;
  for (const auto& tr : transitions) {
    if (!tr.guard.h) throw ValidationError("guard '" + tr.guard.label + "' has no surface function");
    if (!labels.insert(tr.guard.label).second)
      throw ValidationError("duplicate guard label '" + tr.guard.label + "'");
    if (const auto* n = std::get_if<NewtonianImpact>(&tr.law)) {
      if (!(n->e >= 0.0 && n->e <= 1.0))
        throw ValidationError("restitution coefficient must lie in [0,1]");
    } else if (!std::get<CustomImpact>(tr.law).map) {
      throw ValidationError("custom impact for '" + tr.guard.label + "' has no map");
    }
  }
}

const Transition& HybridSystem::transition(const std::string& label) const {
  for (const auto& tr : transitions)
    if (tr.guard.label == label) return tr;
  throw ValidationError("unknown guard label '" + label + "'");
}

TangentState tangent_from_phase(double t, const Vector& y, int n) {
  return {t, y.head(n), y.segment(n, n)};
}

CotangentState cotangent_from_phase(double t, const Vector& y, int n) {
  return {t, y.head(n), y.segment(n, n)};
}

Vector to_phase(const TangentState& s) {
  Vector y(2 * s.q.size());
  y << s.q, s.v;
  return y;
}

Vector to_phase(const CotangentState& s) {
  Vector y(2 * s.q.size());
  y << s.q, s.p;
  return y;
}

TangentState state_at(const FlowArc<TangentState>& arc, double t, int n) {
  return tangent_from_phase(t, arc.dense.eval(t), n);
}

CotangentState state_at(const FlowArc<CotangentState>& arc, double t, int n) {
  return cotangent_from_phase(t, arc.dense.eval(t), n);
}

namespace {

void require_on_guard(const Guard& g, double t, const Vector& q, const NumericsConfig& cfg) {
  const double h = g.h(t, q);
  if (!(std::abs(h) <= 10.0 * cfg.event_tol))
    throw ValidationError("state is not on guard '" + g.label + "' (h=" + std::to_string(h) + ")");
}

Vector checked_normal(const Guard& g, double t, const Vector& q, const NumericsConfig& cfg) {
  Vector dh = guard_gradient(g, t, q, cfg);
  if (!dh.allFinite() || dh.norm() < 1e-12)
    throw DegenerateGuardError("guard '" + g.label + "' has a vanishing surface normal");
  return dh;
}

Vector lagrangian_rhs(const MechanicalSystem& sys, const NumericsConfig& cfg, double t,
                      const Vector& y) {
  const int n = sys.n;
  const StateDerivative d = forced_el_field(sys, tangent_from_phase(t, y, n), cfg);
  Vector out(y.size());
  out << d.dq, d.dv_or_dp;
  return out;
}

Vector hamiltonian_rhs(const MechanicalSystem& sys, const NumericsConfig& cfg, double t,
                       const Vector& y) {
  const int n = sys.n;
  const StateDerivative d = forced_hamiltonian_field(sys, cotangent_from_phase(t, y, n), cfg);
  Vector out(y.size());
  out << d.dq, d.dv_or_dp;
  return out;
}

std::vector<std::string> labels_of(const HybridSystem& hs) {
  std::vector<std::string> out;
  for (const auto& tr : hs.transitions) out.push_back(tr.guard.label);
  return out;
}

template <class State, class FromPhase>
FlowArc<State> make_arc(engine::PhaseArc&& pa, FromPhase&& from_phase) {
  FlowArc<State> arc;
  arc.samples.reserve(pa.knot_t.size());
  for (std::size_t i = 0; i < pa.knot_t.size(); ++i)
    arc.samples.push_back(from_phase(pa.knot_t[i], pa.knot_y[i]));
  arc.dense = std::move(pa.dense);
  return arc;
}

/// Shared hybrid-flow loop; `impact` maps (label, pre) to post.
template <class State, class FromPhase, class Impact>
FlowRecord<State> run_loop(const HybridSystem& hs, const OdeRhs& rhs,
                           const std::vector<engine::PhaseGuard>& guards, const State& s0,
                           double t_end, const NumericsConfig& cfg, FromPhase&& from_phase,
                           Impact&& impact) {
  FlowRecord<State> rec;
  const auto labels = labels_of(hs);
  std::vector<engine::Arming> arming = engine::initial_arming(guards, s0.t, to_phase(s0), cfg, labels);

  double t = s0.t;
  Vector y = to_phase(s0);
  for (;;) {
    engine::PhaseArc pa = engine::integrate(rhs, guards, t, y, t_end, cfg, arming);
    if (pa.failed) {
      rec.termination = Termination::integration_failure;
      rec.message = pa.message;
      rec.arcs.push_back(make_arc<State>(std::move(pa), from_phase));
      return rec;
    }
    if (!pa.hit) {
      rec.termination = Termination::time_horizon_reached;
      rec.arcs.push_back(make_arc<State>(std::move(pa), from_phase));
      return rec;
    }
    const engine::Hit hit = std::move(*pa.hit);
    rec.arcs.push_back(make_arc<State>(std::move(pa), from_phase));

    ImpactEventT<State> ev;
    ev.tau = hit.t;
    ev.guard_label = labels[hit.guard];
    ev.pre_state = from_phase(hit.t, hit.y);
    try {
      ev.post_state = impact(ev.guard_label, ev.pre_state);
      ev.post_state.validate();
    } catch (const std::exception& e) {
      rec.termination = Termination::integration_failure;
      rec.message = std::string("impact failed: ") + e.what();
      return rec;
    }
    const bool too_close = !rec.events.empty() && ev.tau - rec.events.back().tau < cfg.zeno_gap;
    rec.events.push_back(ev);

    y = to_phase(ev.post_state);
    t = ev.tau;
    if (hit.chattering || too_close ||
        static_cast<std::int64_t>(rec.events.size()) >= cfg.max_impacts) {
      rec.arcs.push_back(make_arc<State>(engine::integrate(rhs, guards, t, y, t, cfg, arming),
                                         from_phase));
      rec.termination = Termination::zeno_detected;
      rec.message = hit.chattering ? "state left through guard '" + ev.guard_label +
                                          "' without leaving its event band"
                                    : "impact gap below zeno_gap or impact budget exhausted";
      return rec;
    }
    arming[hit.guard] = engine::Arming::cooling;
  }
}

void check_start(const HybridSystem& hs, double t0, double t_end, const NumericsConfig& cfg) {
  hs.validate();
  cfg.validate();
  if (!(t_end > t0)) throw ValidationError("t_end must be greater than the initial time");
}

}  // namespace

ArcResult integrate_arc(const HybridSystem& hs, const TangentState& s0, double t_end,
                        const NumericsConfig& cfg) {
  hs.validate();
  s0.validate();
  const int n = hs.sys.n;
  if (s0.dim() != n) throw DimensionError("initial state dimension does not match the system");

  std::vector<engine::PhaseGuard> guards;
  for (const auto& tr : hs.transitions) {
    const Guard& g = tr.guard;
    guards.push_back({[&g, n](double t, const Vector& y) { return g.h(t, y.head(n)); },
                      [&g, n, &cfg](double t, const Vector& y) {
                        return guard_approach(g, t, y.head(n), y.segment(n, n), cfg);
                      }});
  }
  auto arming = engine::initial_arming(guards, s0.t, to_phase(s0), cfg, labels_of(hs));
  OdeRhs rhs = [&hs, &cfg](double t, const Vector& y) { return lagrangian_rhs(hs.sys, cfg, t, y); };
  engine::PhaseArc pa = engine::integrate(rhs, guards, s0.t, to_phase(s0), t_end, cfg, arming);
  if (pa.failed) throw IntegrationError(pa.message);

  ArcResult out;
  std::optional<engine::Hit> hit = pa.hit;
  out.arc = make_arc<TangentState>(std::move(pa), [n](double t, const Vector& y) {
    return tangent_from_phase(t, y, n);
  });
  if (hit)
    out.crossing = Crossing{hit->t, tangent_from_phase(hit->t, hit->y, n),
                            hs.transitions[hit->guard].guard.label};
  return out;
}

TangentState newtonian_impact(const MechanicalSystem& sys, const Guard& g, double e,
                              const TangentState& s, const NumericsConfig& cfg) {
  if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("restitution coefficient must lie in [0,1]");
  require_on_guard(g, s.t, s.q, cfg);
  const Vector dh = checked_normal(g, s.t, s.q, cfg);
  const Matrix m = mass_matrix(sys, s.t, s.q, cfg);
  const Vector w = solve_mass(m, dh, cfg);
  const double denom = dh.dot(w);
  Vector v = s.v - (1.0 + e) * (dh.dot(s.v) / denom) * w;
  return {s.t, s.q, std::move(v)};
}

CotangentState newtonian_impact_momentum(const MechanicalSystem& sys, const Guard& g, double e,
                                         const CotangentState& s, const NumericsConfig& cfg) {
  if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("restitution coefficient must lie in [0,1]");
  require_on_guard(g, s.t, s.q, cfg);
  const Vector dh = checked_normal(g, s.t, s.q, cfg);
  const Matrix m = mass_matrix(sys, s.t, s.q, cfg);
  const Vector minv_dh = solve_mass(m, dh, cfg);
  // <<a,b>> = a^T M^{-1} b; the velocity-linear term shifts p by b(t,q).
  const Vector pk = s.p - linear_term(sys, s.t, s.q);
  Vector p = s.p - (1.0 + e) * (pk.dot(minv_dh) / dh.dot(minv_dh)) * dh;
  return {s.t, s.q, std::move(p)};
}

TangentState apply_impact(const HybridSystem& hs, const std::string& guard_label,
                          const TangentState& s, const NumericsConfig& cfg) {
  const Transition& tr = hs.transition(guard_label);
  if (const auto* n = std::get_if<NewtonianImpact>(&tr.law))
    return newtonian_impact(hs.sys, tr.guard, n->e, s, cfg);
  require_on_guard(tr.guard, s.t, s.q, cfg);
  Vector v = std::get<CustomImpact>(tr.law).map(s.t, s.q, s.v);
  if (v.size() != s.v.size()) throw DimensionError("custom impact map returned wrong dimension");
  if (!v.allFinite()) throw NonFiniteError("custom impact map produced a non-finite state");
  return {s.t, s.q, std::move(v)};
}

CotangentState apply_impact_hamiltonian(const HybridSystem& hs, const std::string& guard_label,
                                        const CotangentState& s, const NumericsConfig& cfg) {
  const Transition& tr = hs.transition(guard_label);
  if (const auto* n = std::get_if<NewtonianImpact>(&tr.law))
    return newtonian_impact_momentum(hs.sys, tr.guard, n->e, s, cfg);
  const TangentState pre = legendre_inverse(hs.sys, s, cfg);
  return legendre_forward(hs.sys, apply_impact(hs, guard_label, pre, cfg));
}

HybridFlowRecord run_hybrid_flow(const HybridSystem& hs, const TangentState& s0, double t_end,
                                 const NumericsConfig& cfg) {
  check_start(hs, s0.t, t_end, cfg);
  s0.validate();
  const int n = hs.sys.n;
  if (s0.dim() != n) throw DimensionError("initial state dimension does not match the system");

  std::vector<engine::PhaseGuard> guards;
  for (const auto& tr : hs.transitions) {
    const Guard& g = tr.guard;
    guards.push_back({[&g, n](double t, const Vector& y) { return g.h(t, y.head(n)); },
                      [&g, n, &cfg](double t, const Vector& y) {
                        return guard_approach(g, t, y.head(n), y.segment(n, n), cfg);
                      }});
  }
  OdeRhs rhs = [&hs, &cfg](double t, const Vector& y) { return lagrangian_rhs(hs.sys, cfg, t, y); };
  return run_loop<TangentState>(
      hs, rhs, guards, s0, t_end, cfg,
      [n](double t, const Vector& y) { return tangent_from_phase(t, y, n); },
      [&](const std::string& label, const TangentState& pre) {
        return apply_impact(hs, label, pre, cfg);
      });
}

HamiltonianFlowRecord run_hybrid_flow_hamiltonian(const HybridSystem& hs, const CotangentState& s0,
                                                  double t_end, const NumericsConfig& cfg) {
  check_start(hs, s0.t, t_end, cfg);
  s0.validate();
  const int n = hs.sys.n;
  if (s0.dim() != n) throw DimensionError("initial state dimension does not match the system");

  auto velocity = [&hs, &cfg, n](double t, const Vector& y) {
    return legendre_inverse(hs.sys, cotangent_from_phase(t, y, n), cfg).v;
  };
  std::vector<engine::PhaseGuard> guards;
  for (const auto& tr : hs.transitions) {
    const Guard& g = tr.guard;
    guards.push_back({[&g, n](double t, const Vector& y) { return g.h(t, y.head(n)); },
                      [&g, n, &cfg, velocity](double t, const Vector& y) {
                        return guard_approach(g, t, y.head(n), velocity(t, y), cfg);
                      }});
  }
  OdeRhs rhs = [&hs, &cfg](double t, const Vector& y) { return hamiltonian_rhs(hs.sys, cfg, t, y); };
  return run_loop<CotangentState>(
      hs, rhs, guards, s0, t_end, cfg,
      [n](double t, const Vector& y) { return cotangent_from_phase(t, y, n); },
      [&](const std::string& label, const CotangentState& pre) {
        return apply_impact_hamiltonian(hs, label, pre, cfg);
      });
}

}  // namespace hymech
