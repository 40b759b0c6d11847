#pragma once

// Momentum maps of abelian translation symmetries in cyclic coordinates,
// Routh reduction to shape space, reconstruction, and checks on how impacts
// act on momentum level sets.

#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hymech/hybrid.hpp"

namespace hymech {

/// Splits configuration indices into a cyclic block and its shape complement.
struct CyclicStructure {
  std::vector<int> cyclic_indices;
  std::vector<int> shape_indices;

  int n() const { return static_cast<int>(cyclic_indices.size() + shape_indices.size()); }
  /// Disjoint and covering 0..n-1.
  void validate(int n) const;

  Vector cyclic_part(const Vector& full) const;
  Vector shape_part(const Vector& full) const;
  Vector assemble(const Vector& shape, const Vector& cyclic) const;
};

/// Probes that L and F do not depend on the cyclic coordinates and that F has
/// no cyclic components, at the given states. Throws ValidationError.
void probe_cyclic_structure(const MechanicalSystem& sys, const CyclicStructure& cyc,
                            std::span<const TangentState> samples, const NumericsConfig& cfg = {});

struct MomentumValue {
  Vector mu;
};

using MomentumMapFn = std::function<Vector(const TangentState&)>;
using VectorFieldFn = std::function<Vector(const Vector& q)>;

/// Cyclic block of the fiber derivative M v (+ b).
MomentumValue momentum_map(const MechanicalSystem& sys, const CyclicStructure& cyc,
                           const TangentState& s);
MomentumMapFn cyclic_momentum_map(const MechanicalSystem& sys, const CyclicStructure& cyc);
/// J_k(s) = <dL/dv, X_k(q)> for infinitesimal generators X_k.
MomentumMapFn generator_momentum_map(const MechanicalSystem& sys, std::vector<VectorFieldFn> generators);

/// Fills mu_pre/mu_post of every event.
void annotate_momentum(HybridFlowRecord& record, const MomentumMapFn& J);

// --- Routh reduction ---------------------------------------------------------

/// Routhian R = L - mu.thetadot with thetadot eliminated through the momentum
/// relation, written as a mechanical system on shape space:
///   R = 1/2 xd^T (M_x - M_xt M_t^{-1} M_tx) xd + (M_xt M_t^{-1} mu).xd
///       - (V + 1/2 mu^T M_t^{-1} mu)
/// with the reduced force F_mu(t,x,xd) = F_x(t,x,xd,thetadot(x,xd,mu)).
class ReducedSystem {
 public:
  ReducedSystem(MechanicalSystem full, CyclicStructure cyc, MomentumValue mu,
                NumericsConfig cfg = {});

  const MechanicalSystem& full() const { return data_->full; }
  const CyclicStructure& cyclic() const { return data_->cyc; }
  const MomentumValue& mu() const { return data_->mu; }
  const MechanicalSystem& shape_system() const { return shape_; }

  double routhian(const TangentState& shape_state) const;
  Vector reduced_force(const TangentState& shape_state) const;
  /// thetadot = M_t^{-1}(mu - M_tx xd).
  Vector cyclic_velocity(double t, const Vector& x, const Vector& xdot) const;
  /// Full state with cyclic coordinates theta and the momentum-consistent velocity.
  TangentState lift(const TangentState& shape_state, const Vector& theta) const;

  struct Data {
    MechanicalSystem full;
    CyclicStructure cyc;
    MomentumValue mu;
    NumericsConfig cfg;
  };

 private:
  std::shared_ptr<const Data> data_;
  MechanicalSystem shape_;
};

ReducedSystem routh_reduce(const MechanicalSystem& sys, const CyclicStructure& cyc,
                           const MomentumValue& mu, const NumericsConfig& cfg = {});

StateDerivative reduced_field(const ReducedSystem& red, const TangentState& shape_state,
                              const NumericsConfig& cfg = {});

struct ReducedImpactResult {
  Vector xdot;
  MomentumValue mu;
};

/// Reduced reset: shape velocity and momentum after an impact, given the
/// pre-impact shape state, the carried cyclic phase and the current momentum.
using ReducedImpactFn = std::function<ReducedImpactResult(
    double t, const Vector& x, const Vector& xdot, const Vector& theta, const MomentumValue& mu)>;

struct ReducedTransition {
  std::string label;  // names a guard of the full system
  ReducedImpactFn impact;
};

/// Reduced hybrid data. Guards are those of `full`, evaluated on the lifted
/// state; the cyclic phase is integrated alongside the shape state for this.
struct ReducedHybridData {
  HybridSystem full;
  CyclicStructure cyc;
  std::vector<ReducedTransition> transitions;
};

/// Shape-space record. Arc phase vectors are [x, xd, theta]; events carry the
/// momentum before and after; mu_sequence[i] is the momentum on arc i.
struct ReducedFlowRecord {
  HybridFlowRecord record;
  std::vector<MomentumValue> mu_sequence;
  int shape_dim = 0;
  int cyclic_dim = 0;
};

ReducedFlowRecord run_reduced_hybrid_flow(const ReducedHybridData& data, const MomentumValue& mu0,
                                          const TangentState& shape0, const Vector& theta0,
                                          double t_end, const NumericsConfig& cfg = {});

/// Reconstruction by quadrature of thetadot on each hybrid interval, starting
/// from theta0 and carrying theta through impacts unchanged. Sampled on the
/// reduced record's step grid (including the pre/post samples of every event).
std::vector<TangentState> reconstruct(const MechanicalSystem& full_sys, const CyclicStructure& cyc,
                                      const ReducedFlowRecord& reduced, const Vector& theta0,
                                      const NumericsConfig& cfg = {});
/// Same, sampled at the given non-decreasing times. At an impact time the
/// post-impact state is returned.
std::vector<TangentState> reconstruct_at(const MechanicalSystem& full_sys,
                                         const CyclicStructure& cyc,
                                         const ReducedFlowRecord& reduced, const Vector& theta0,
                                         std::span<const double> times,
                                         const NumericsConfig& cfg = {});

// --- classification and conservation checks ----------------------------------

enum class MomentumVerdict { hybrid, generalized, neither };
const char* to_string(MomentumVerdict v);

/// Draws a pre-impact state on `guard` at time t with momentum value mu.
using ProbeSampler = std::function<TangentState(const std::string& guard, const Vector& mu, double t,
                                                std::mt19937_64& rng)>;

struct EventMomentum {
  double tau = 0.0;
  std::string guard_label;
  Vector mu_pre;
  Vector mu_post;
};

struct ClassificationReport {
  MomentumVerdict verdict = MomentumVerdict::neither;
  std::vector<EventMomentum> events;
  /// Largest |mu_post - mu_pre| over events and probes.
  double max_momentum_jump = 0.0;
  /// Largest spread of mu_post among probes sharing a guard and a pre-level.
  double max_level_set_violation = 0.0;
  int probes_per_level = 0;
  /// The cyclic (isotropy) structure is the same before and after every impact.
  bool isotropy_preserved = true;
};

ClassificationReport classify_momentum_map(const HybridSystem& hs, const HybridFlowRecord& record,
                                           const MomentumMapFn& J, const ProbeSampler& sampler,
                                           const NumericsConfig& cfg = {}, int probes_per_level = 20,
                                           double tol = 1e-8);

struct HybridConstantReport {
  double max_drift = 0.0;  // along arcs
  double max_jump = 0.0;   // across impacts
  bool is_hybrid_constant = false;
};

using StateFunction = std::function<double(const TangentState&)>;

HybridConstantReport check_hybrid_constant(const HybridFlowRecord& record, const StateFunction& f,
                                           double tol = 1e-7);

struct SymmetryReport {
  std::vector<double> residuals;  // X^c(L) - F(X^c) at each sample
  double max_residual = 0.0;      // largest |residual|
  double max_drift = 0.0;         // of X^v(L) along the monitored arc
  bool is_symmetry = false;
};

/// Complete-lift test X^c(L) = F^L(X^c) at the samples, plus conservation of
/// X^v(L) along an arc of length `horizon` from the first sample.
SymmetryReport check_symmetry(const MechanicalSystem& sys, const VectorFieldFn& X,
                              std::span<const TangentState> samples, const NumericsConfig& cfg = {},
                              double horizon = 1.0, double tol = 1e-8);

}  // namespace hymech
