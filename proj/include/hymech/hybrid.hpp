#pragma once

// Simple hybrid forced mechanical systems: continuous arcs of the forced
// Euler-Lagrange (or Hamiltonian) field interrupted by impacts on switching
// surfaces {h(t,q) = 0}. The continuous domain is h >= 0; a crossing into
// h < 0 is an impact when the guard's approach value is negative there.

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hymech/mech_core.hpp"
#include "hymech/ode.hpp"

namespace hymech {

struct Guard {
  std::string label;
  std::function<double(double t, const Vector& q)> h;
  /// Impact admissible when approach < 0. Empty: dh/dt = dh/dt|_q + grad h . v.
  std::function<double(double t, const Vector& q, const Vector& v)> approach;
  /// Optional analytic grad_q h and dh/dt; central differences otherwise.
  std::function<Vector(double t, const Vector& q)> gradient;
  std::function<double(double t, const Vector& q)> h_dt;
  bool time_dependent = false;
};

Vector guard_gradient(const Guard& g, double t, const Vector& q, const NumericsConfig& cfg = {});
double guard_time_partial(const Guard& g, double t, const Vector& q, const NumericsConfig& cfg = {});
double guard_approach(const Guard& g, double t, const Vector& q, const Vector& v,
                      const NumericsConfig& cfg = {});

struct NewtonianImpact {
  double e = 1.0;
};

struct CustomImpact {
  /// Post-impact velocity; the configuration is left unchanged.
  std::function<Vector(double t, const Vector& q, const Vector& v)> map;
};

using ImpactLaw = std::variant<NewtonianImpact, CustomImpact>;

struct Transition {
  Guard guard;
  ImpactLaw law;
};

struct HybridSystem {
  MechanicalSystem sys;
  std::vector<Transition> transitions;
  bool pure_continuous = false;

  void validate() const;
  const Transition& transition(const std::string& label) const;
};

enum class Termination { time_horizon_reached, zeno_detected, integration_failure };

const char* to_string(Termination t);

/// Samples at accepted integrator steps plus the dense interpolant of one arc.
template <class State>
struct FlowArc {
  std::vector<State> samples;
  DenseTrajectory dense;

  double t_begin() const { return dense.t_begin(); }
  double t_end() const { return dense.t_end(); }
  const State& front() const { return samples.front(); }
  const State& back() const { return samples.back(); }
};

template <class State>
struct ImpactEventT {
  double tau = 0.0;
  State pre_state;
  State post_state;
  std::string guard_label;
  Vector mu_pre;
  Vector mu_post;
};

template <class State>
struct FlowRecord {
  std::vector<FlowArc<State>> arcs;
  std::vector<ImpactEventT<State>> events;
  Termination termination = Termination::time_horizon_reached;
  std::string message;
};

using ImpactEvent = ImpactEventT<TangentState>;
using HybridFlowRecord = FlowRecord<TangentState>;
using HamiltonianFlowRecord = FlowRecord<CotangentState>;

/// Splits a phase vector [q; w; extra...] into a state of dimension n.
TangentState tangent_from_phase(double t, const Vector& y, int n);
CotangentState cotangent_from_phase(double t, const Vector& y, int n);
Vector to_phase(const TangentState& s);
Vector to_phase(const CotangentState& s);

/// State on an arc at time t, evaluated from the dense output.
TangentState state_at(const FlowArc<TangentState>& arc, double t, int n);
CotangentState state_at(const FlowArc<CotangentState>& arc, double t, int n);

struct Crossing {
  double t = 0.0;
  TangentState state;
  std::string guard_label;
};

struct ArcResult {
  FlowArc<TangentState> arc;
  std::optional<Crossing> crossing;
};

ArcResult integrate_arc(const HybridSystem& hs, const TangentState& s0, double t_end,
                        const NumericsConfig& cfg = {});

TangentState newtonian_impact(const MechanicalSystem& sys, const Guard& g, double e,
                              const TangentState& s, const NumericsConfig& cfg = {});
/// Momentum-space form P_q(p) = p - (1+e) <<p,dh>>/||dh||^2 dh.
CotangentState newtonian_impact_momentum(const MechanicalSystem& sys, const Guard& g, double e,
                                         const CotangentState& s, const NumericsConfig& cfg = {});

TangentState apply_impact(const HybridSystem& hs, const std::string& guard_label,
                          const TangentState& s, const NumericsConfig& cfg = {});
/// The impact law conjugated through the Legendre transform.
CotangentState apply_impact_hamiltonian(const HybridSystem& hs, const std::string& guard_label,
                                        const CotangentState& s, const NumericsConfig& cfg = {});

HybridFlowRecord run_hybrid_flow(const HybridSystem& hs, const TangentState& s0, double t_end,
                                 const NumericsConfig& cfg = {});
HamiltonianFlowRecord run_hybrid_flow_hamiltonian(const HybridSystem& hs, const CotangentState& s0,
                                                  double t_end, const NumericsConfig& cfg = {});

}  // namespace hymech
