#include "hymech/symmetry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hymech/engine.hpp"

namespace hymech {

// --- CyclicStructure ---------------------------------------------------------

void CyclicStructure::validate(int n) const {
  if (cyclic_indices.empty()) throw ValidationError("cyclic structure has no cyclic indices");
  std::set<int> seen;
  for (int i : cyclic_indices) {
    if (i < 0 || i >= n) throw ValidationError("cyclic index out of range");
    if (!seen.insert(i).second) throw ValidationError("cyclic and shape indices must be disjoint");
  }
  for (int i : shape_indices) {
    if (i < 0 || i >= n) throw ValidationError("shape index out of range");
    if (!seen.insert(i).second) throw ValidationError("cyclic and shape indices must be disjoint");
  }
  if (static_cast<int>(seen.size()) != n)
    throw ValidationError("cyclic and shape indices must cover every coordinate");
}

Vector CyclicStructure::cyclic_part(const Vector& full) const {
  Vector out(cyclic_indices.size());
  for (std::size_t i = 0; i < cyclic_indices.size(); ++i) out[i] = full[cyclic_indices[i]];
  return out;
}

Vector CyclicStructure::shape_part(const Vector& full) const {
  Vector out(shape_indices.size());
  for (std::size_t i = 0; i < shape_indices.size(); ++i) out[i] = full[shape_indices[i]];
  return out;
}

Vector CyclicStructure::assemble(const Vector& shape, const Vector& cyclic) const {
  Vector out(n());
  for (std::size_t i = 0; i < shape_indices.size(); ++i) out[shape_indices[i]] = shape[i];
  for (std::size_t i = 0; i < cyclic_indices.size(); ++i) out[cyclic_indices[i]] = cyclic[i];
  return out;
}

void probe_cyclic_structure(const MechanicalSystem& sys, const CyclicStructure& cyc,
                            std::span<const TangentState> samples, const NumericsConfig& /*cfg*/) {
  cyc.validate(sys.n);
  constexpr double kTol = 1e-9;
  constexpr std::array<double, 2> kShifts{0.37, -1.9};
  for (const auto& s : samples) {
    const double l0 = eval_lagrangian(sys, s);
    const Vector f0 = force_at(sys, s.t, s.q, s.v);
    const double fscale = std::max(1.0, f0.cwiseAbs().maxCoeff());
    for (int c : cyc.cyclic_indices) {
      if (std::abs(f0[c]) > kTol * fscale)
        throw ValidationError("external force has a component along cyclic coordinate " +
                              std::to_string(c));
      for (double shift : kShifts) {
        TangentState moved = s;
        moved.q[c] += shift;
        if (std::abs(eval_lagrangian(sys, moved) - l0) > kTol * std::max(1.0, std::abs(l0)))
          throw ValidationError("Lagrangian depends on cyclic coordinate " + std::to_string(c));
        if ((force_at(sys, moved.t, moved.q, moved.v) - f0).cwiseAbs().maxCoeff() > kTol * fscale)
          throw ValidationError("external force depends on cyclic coordinate " + std::to_string(c));
      }
    }
  }
}

// --- momentum maps -------------------------------------------------------------

MomentumValue momentum_map(const MechanicalSystem& sys, const CyclicStructure& cyc,
                           const TangentState& s) {
  return {cyc.cyclic_part(legendre_forward(sys, s).p)};
}

MomentumMapFn cyclic_momentum_map(const MechanicalSystem& sys, const CyclicStructure& cyc) {
  return [sys, cyc](const TangentState& s) { return momentum_map(sys, cyc, s).mu; };
}

MomentumMapFn generator_momentum_map(const MechanicalSystem& sys,
                                     std::vector<VectorFieldFn> generators) {
  return [sys, generators = std::move(generators)](const TangentState& s) {
    const Vector p = legendre_forward(sys, s).p;
    Vector mu(generators.size());
    for (std::size_t k = 0; k < generators.size(); ++k) mu[k] = p.dot(generators[k](s.q));
    return mu;
  };
}

void annotate_momentum(HybridFlowRecord& record, const MomentumMapFn& J) {
  for (auto& ev : record.events) {
    ev.mu_pre = J(ev.pre_state);
    ev.mu_post = J(ev.post_state);
  }
}

// --- Routh reduction -------------------------------------------------------------

namespace {

struct Blocks {
  Matrix shape;   // M_x
  Matrix mixed;   // M_tx: rows cyclic, columns shape
  Matrix cyclic;  // M_t
};

Blocks split(const Matrix& m, const CyclicStructure& cyc) {
  const auto& c = cyc.cyclic_indices;
  const auto& s = cyc.shape_indices;
  Blocks b{Matrix(s.size(), s.size()), Matrix(c.size(), s.size()), Matrix(c.size(), c.size())};
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) b.shape(i, j) = m(s[i], s[j]);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) b.mixed(i, j) = m(c[i], s[j]);
    for (std::size_t j = 0; j < c.size(); ++j) b.cyclic(i, j) = m(c[i], c[j]);
  }
  return b;
}

// Conditioning is measured against the scale of the full mass matrix.
Eigen::LLT<Matrix> factor_cyclic(const Matrix& a, double full_norm, const NumericsConfig& cfg) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success || llt.rcond() * cfg.cond_cap < 1.0 ||
      llt.rcond() * a.cwiseAbs().colwise().sum().maxCoeff() * cfg.cond_cap < full_norm)
    throw RegularityError("cyclic block of the mass matrix is not invertible");
  return llt;
}

using Data = ReducedSystem::Data;

Vector reference_q(const Data& d, const Vector& x) {
  return d.cyc.assemble(x, Vector::Zero(d.cyc.cyclic_indices.size()));
}

/// Pieces of the reduced mass, linear term and effective potential at (t, x).
struct Pieces {
  Blocks blocks;
  Eigen::LLT<Matrix> llt;
  Matrix ainv_c;   // M_t^{-1} M_tx
  Vector ainv_mu;  // M_t^{-1} mu
};

Pieces pieces(const Data& d, double t, const Vector& x) {
  const Vector q = reference_q(d, x);
  const Matrix m = mass_matrix(d.full, t, q, d.cfg);
  Blocks b = split(m, d.cyc);
  auto llt = factor_cyclic(b.cyclic, m.cwiseAbs().colwise().sum().maxCoeff(), d.cfg);
  Matrix ainv_c = llt.solve(b.mixed);
  Vector ainv_mu = llt.solve(d.mu.mu);
  return {std::move(b), std::move(llt), std::move(ainv_c), std::move(ainv_mu)};
}

// Derivatives along a direction in which the full mass matrix changes by dm.
Matrix reduced_mass_derivative(const Pieces& p, const Blocks& db) {
  return db.shape - db.mixed.transpose() * p.ainv_c - p.ainv_c.transpose() * db.mixed +
         p.ainv_c.transpose() * db.cyclic * p.ainv_c;
}

Vector linear_derivative(const Pieces& p, const Blocks& db) {
  return db.mixed.transpose() * p.ainv_mu - p.ainv_c.transpose() * (db.cyclic * p.ainv_mu);
}

double effective_potential_derivative(const Pieces& p, const Blocks& db) {
  return -0.5 * p.ainv_mu.dot(db.cyclic * p.ainv_mu);
}

MechanicalSystem build_shape_system(const std::shared_ptr<const Data>& data) {
  const Data& d0 = *data;
  MechanicalSystem s;
  s.n = static_cast<int>(d0.cyc.shape_indices.size());
  s.time_dependent = d0.full.time_dependent;
  for (int i : d0.cyc.shape_indices)
    s.coordinate_labels.push_back(i < static_cast<int>(d0.full.coordinate_labels.size())
                                      ? d0.full.coordinate_labels[i]
                                      : "x" + std::to_string(i));

  s.mass = [data](double t, const Vector& x) {
    const Pieces p = pieces(*data, t, x);
    Matrix m = p.blocks.shape - p.blocks.mixed.transpose() * p.ainv_c;
    return Matrix(0.5 * (m + m.transpose()));
  };
  s.potential = [data](double t, const Vector& x) {
    const Pieces p = pieces(*data, t, x);
    return data->full.potential(t, reference_q(*data, x)) + 0.5 * data->mu.mu.dot(p.ainv_mu);
  };
  s.linear = [data](double t, const Vector& x) {
    const Pieces p = pieces(*data, t, x);
    return Vector(p.blocks.mixed.transpose() * p.ainv_mu);
  };
  s.mass_dq = [data](double t, const Vector& x) {
    const Data& d = *data;
    const Pieces p = pieces(d, t, x);
    const auto dm = mass_partials_q(d.full, t, reference_q(d, x), d.cfg);
    std::vector<Matrix> out;
    for (int k : d.cyc.shape_indices) out.push_back(reduced_mass_derivative(p, split(dm[k], d.cyc)));
    return out;
  };
  s.mass_dt = [data](double t, const Vector& x) {
    const Data& d = *data;
    const Pieces p = pieces(d, t, x);
    return reduced_mass_derivative(p, split(mass_partial_t(d.full, t, reference_q(d, x), d.cfg), d.cyc));
  };
  s.potential_dq = [data](double t, const Vector& x) {
    const Data& d = *data;
    const Vector q = reference_q(d, x);
    const Pieces p = pieces(d, t, x);
    const auto dm = mass_partials_q(d.full, t, q, d.cfg);
    const Vector dv = potential_gradient(d.full, t, q, d.cfg);
    Vector g(d.cyc.shape_indices.size());
    for (std::size_t i = 0; i < d.cyc.shape_indices.size(); ++i) {
      const int k = d.cyc.shape_indices[i];
      g[i] = dv[k] + effective_potential_derivative(p, split(dm[k], d.cyc));
    }
    return g;
  };
  s.linear_dq = [data](double t, const Vector& x) {
    const Data& d = *data;
    const Pieces p = pieces(d, t, x);
    const auto dm = mass_partials_q(d.full, t, reference_q(d, x), d.cfg);
    Matrix jac(d.cyc.shape_indices.size(), d.cyc.shape_indices.size());
    for (std::size_t i = 0; i < d.cyc.shape_indices.size(); ++i)
      jac.col(i) = linear_derivative(p, split(dm[d.cyc.shape_indices[i]], d.cyc));
    return jac;
  };
  s.linear_dt = [data](double t, const Vector& x) {
    const Data& d = *data;
    const Pieces p = pieces(d, t, x);
    return linear_derivative(p, split(mass_partial_t(d.full, t, reference_q(d, x), d.cfg), d.cyc));
  };
  s.force = [data](double t, const Vector& x, const Vector& xdot) {
    const Data& d = *data;
    const Pieces p = pieces(d, t, x);
    const Vector thetadot = p.ainv_mu - p.ainv_c * xdot;
    const Vector f = force_at(d.full, t, reference_q(d, x), d.cyc.assemble(xdot, thetadot));
    return d.cyc.shape_part(f);
  };
  return s;
}

}  // namespace

ReducedSystem::ReducedSystem(MechanicalSystem full, CyclicStructure cyc, MomentumValue mu,
                             NumericsConfig cfg) {
  full.validate();
  cyc.validate(full.n);
  if (cyc.shape_indices.empty()) throw ValidationError("reduction needs at least one shape coordinate");
  if (mu.mu.size() != static_cast<Eigen::Index>(cyc.cyclic_indices.size()))
    throw DimensionError("momentum value must have one entry per cyclic coordinate");
  if (!mu.mu.allFinite()) throw NonFiniteError("momentum value is not finite");
  data_ = std::make_shared<const Data>(Data{std::move(full), std::move(cyc), std::move(mu), cfg});
  shape_ = build_shape_system(data_);
}

double ReducedSystem::routhian(const TangentState& s) const { return eval_lagrangian(shape_, s); }

Vector ReducedSystem::reduced_force(const TangentState& s) const {
  return force_at(shape_, s.t, s.q, s.v);
}

Vector ReducedSystem::cyclic_velocity(double t, const Vector& x, const Vector& xdot) const {
  const Pieces p = pieces(*data_, t, x);
  return p.ainv_mu - p.ainv_c * xdot;
}

TangentState ReducedSystem::lift(const TangentState& s, const Vector& theta) const {
  return {s.t, data_->cyc.assemble(s.q, theta),
          data_->cyc.assemble(s.v, cyclic_velocity(s.t, s.q, s.v))};
}

ReducedSystem routh_reduce(const MechanicalSystem& sys, const CyclicStructure& cyc,
                           const MomentumValue& mu, const NumericsConfig& cfg) {
  return ReducedSystem(sys, cyc, mu, cfg);
}

StateDerivative reduced_field(const ReducedSystem& red, const TangentState& shape_state,
                              const NumericsConfig& cfg) {
  try {
    return forced_el_field(red.shape_system(), shape_state, cfg);
  } catch (const SingularMetricError& e) {
    throw RegularityError(e.what());
  }
}

// --- reduced hybrid flow -----------------------------------------------------------

ReducedFlowRecord run_reduced_hybrid_flow(const ReducedHybridData& data, const MomentumValue& mu0,
                                          const TangentState& shape0, const Vector& theta0,
                                          double t_end, const NumericsConfig& cfg) {
  cfg.validate();
  data.full.validate();
  data.cyc.validate(data.full.sys.n);
  shape0.validate();
  const int k = static_cast<int>(data.cyc.shape_indices.size());
  const int c = static_cast<int>(data.cyc.cyclic_indices.size());
  if (shape0.dim() != k) throw DimensionError("reduced initial state has wrong dimension");
  if (theta0.size() != c) throw DimensionError("initial cyclic coordinates have wrong dimension");
  if (!(t_end > shape0.t)) throw ValidationError("t_end must be greater than the initial time");

  std::vector<const Guard*> full_guards;
  std::vector<std::string> labels;
  for (const auto& tr : data.transitions) {
    full_guards.push_back(&data.full.transition(tr.label).guard);
    labels.push_back(tr.label);
  }

  ReducedFlowRecord out;
  out.shape_dim = k;
  out.cyclic_dim = c;
  HybridFlowRecord& rec = out.record;

  auto make_guards = [&](const ReducedSystem& red) {
    std::vector<engine::PhaseGuard> guards;
    for (const Guard* g : full_guards) {
      guards.push_back(
          {[g, &red, k, c](double t, const Vector& y) {
             return g->h(t, red.cyclic().assemble(y.head(k), y.segment(2 * k, c)));
           },
           [g, &red, k, c, &cfg](double t, const Vector& y) {
             const TangentState full =
                 red.lift(tangent_from_phase(t, y, k), y.segment(2 * k, c));
             return guard_approach(*g, t, full.q, full.v, cfg);
           }});
    }
    return guards;
  };
  auto make_rhs = [&](const ReducedSystem& red) -> OdeRhs {
    return [&red, k, c, &cfg](double t, const Vector& y) {
      const TangentState s = tangent_from_phase(t, y, k);
      const StateDerivative d = reduced_field(red, s, cfg);
      Vector out(2 * k + c);
      out << d.dq, d.dv_or_dp, red.cyclic_velocity(t, s.q, s.v);
      return out;
    };
  };
  auto to_shape = [k](double t, const Vector& y) { return tangent_from_phase(t, y, k); };

  MomentumValue mu = mu0;
  double t = shape0.t;
  Vector y(2 * k + c);
  y << shape0.q, shape0.v, theta0;

  auto red = std::make_unique<ReducedSystem>(data.full.sys, data.cyc, mu, cfg);
  std::vector<engine::Arming> arming =
      engine::initial_arming(make_guards(*red), t, y, cfg, labels);

  for (;;) {
    out.mu_sequence.push_back(mu);
    const auto guards = make_guards(*red);
    engine::PhaseArc pa = engine::integrate(make_rhs(*red), guards, t, y, t_end, cfg, arming);

    FlowArc<TangentState> arc;
    for (std::size_t i = 0; i < pa.knot_t.size(); ++i)
      arc.samples.push_back(to_shape(pa.knot_t[i], pa.knot_y[i]));
    arc.dense = std::move(pa.dense);
    rec.arcs.push_back(std::move(arc));
    if (pa.failed) {
      rec.termination = Termination::integration_failure;
      rec.message = pa.message;
      return out;
    }
    if (!pa.hit) {
      rec.termination = Termination::time_horizon_reached;
      return out;
    }

    const engine::Hit& hit = *pa.hit;
    ImpactEvent ev;
    ev.tau = hit.t;
    ev.guard_label = labels[hit.guard];
    ev.pre_state = to_shape(hit.t, hit.y);
    ev.mu_pre = mu.mu;
    const Vector theta = hit.y.segment(2 * k, c);
    try {
      ReducedImpactResult r = data.transitions[hit.guard].impact(hit.t, ev.pre_state.q,
                                                                 ev.pre_state.v, theta, mu);
      if (r.mu.mu.size() != c) throw DimensionError("reduced impact changed the momentum dimension");
      if (r.xdot.size() != k) throw DimensionError("reduced impact returned wrong dimension");
      ev.post_state = {hit.t, ev.pre_state.q, r.xdot};
      ev.post_state.validate();
      if (!r.mu.mu.allFinite()) throw NonFiniteError("non-finite momentum after impact");
      mu = std::move(r.mu);
    } catch (const std::exception& e) {
      rec.termination = Termination::integration_failure;
      rec.message = std::string("reduced impact failed: ") + e.what();
      return out;
    }
    ev.mu_post = mu.mu;
    const bool too_close = !rec.events.empty() && ev.tau - rec.events.back().tau < cfg.zeno_gap;
    rec.events.push_back(ev);

    t = hit.t;
    y << ev.post_state.q, ev.post_state.v, theta;
    red = std::make_unique<ReducedSystem>(data.full.sys, data.cyc, mu, cfg);
    if (hit.chattering || too_close ||
        static_cast<std::int64_t>(rec.events.size()) >= cfg.max_impacts) {
      out.mu_sequence.push_back(mu);
      FlowArc<TangentState> tail;
      tail.dense = DenseTrajectory(t, y);
      tail.samples.push_back(to_shape(t, y));
      rec.arcs.push_back(std::move(tail));
      rec.termination = Termination::zeno_detected;
      rec.message = "impact gap below zeno_gap or state left through a guard band";
      return out;
    }
    arming[hit.guard] = engine::Arming::cooling;
  }
}

// --- reconstruction -------------------------------------------------------------

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGlNodes{0.0, -0.5384693101056831, 0.5384693101056831,
                                         -0.9061798459386640, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights{0.5688888888888889, 0.4786286704993665,
                                           0.4786286704993665, 0.2369268850561891,
                                           0.2369268850561891};

class ArcQuadrature {
 public:
  ArcQuadrature(const ReducedSystem& red, const FlowArc<TangentState>& arc, int k)
      : red_(red), arc_(arc), k_(k) {
    const auto& steps = arc.dense.steps();
    cumulative_.assign(steps.size() + 1, Vector::Zero(red.cyclic().cyclic_indices.size()));
    for (std::size_t j = 0; j < steps.size(); ++j) {
      const double a = steps[j].t0;
      const double b = std::min(steps[j].t1(), arc.t_end());
      cumulative_[j + 1] = cumulative_[j];
      if (b > a) cumulative_[j + 1] += integrate(steps[j], a, b);
    }
  }

  /// Integral of thetadot from the arc start to t.
  Vector integral_to(double t) const {
    const auto& steps = arc_.dense.steps();
    if (steps.empty() || t <= arc_.t_begin()) return cumulative_.front();
    t = std::min(t, arc_.t_end());
    auto it = std::upper_bound(steps.begin(), steps.end(), t,
                               [](double value, const DenseStep& s) { return value < s.t0; });
    const std::size_t j = it == steps.begin() ? 0 : static_cast<std::size_t>(it - steps.begin()) - 1;
    return cumulative_[j] + integrate(steps[j], steps[j].t0, t);
  }

  Vector total() const { return cumulative_.back(); }

  Vector theta_dot(double t) const {
    const Vector y = arc_.dense.eval(t);
    return red_.cyclic_velocity(t, y.head(k_), y.segment(k_, k_));
  }

 private:
  Vector integrate(const DenseStep& step, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    Vector acc = Vector::Zero(red_.cyclic().cyclic_indices.size());
    for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
      const double s = mid + half * kGlNodes[i];
      const Vector y = step.eval(s);
      acc += kGlWeights[i] * red_.cyclic_velocity(s, y.head(k_), y.segment(k_, k_));
    }
    return half * acc;
  }

  const ReducedSystem& red_;
  const FlowArc<TangentState>& arc_;
  int k_;
  std::vector<Vector> cumulative_;
};

struct Reconstructor {
  std::vector<ReducedSystem> reduced;
  std::vector<ArcQuadrature> quad;
  std::vector<Vector> theta_start;

  Reconstructor(const MechanicalSystem& full, const CyclicStructure& cyc, const ReducedFlowRecord& r,
                const Vector& theta0, const NumericsConfig& cfg) {
    const auto& arcs = r.record.arcs;
    if (r.mu_sequence.size() < arcs.size())
      throw ValidationError("reduced record is missing its momentum sequence");
    if (theta0.size() != static_cast<Eigen::Index>(cyc.cyclic_indices.size()))
      throw DimensionError("initial cyclic coordinates have wrong dimension");
    reduced.reserve(arcs.size());
    quad.reserve(arcs.size());
    for (std::size_t i = 0; i < arcs.size(); ++i) reduced.emplace_back(full, cyc, r.mu_sequence[i], cfg);
    Vector theta = theta0;
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      quad.emplace_back(reduced[i], arcs[i], r.shape_dim);
      theta_start.push_back(theta);
      // Impacts preserve the configuration, so theta carries over unchanged.
      theta = theta + quad.back().total();
    }
  }

  TangentState at(const ReducedFlowRecord& r, std::size_t i, double t) const {
    const int k = r.shape_dim;
    const Vector y = r.record.arcs[i].dense.eval(t);
    const TangentState shape = tangent_from_phase(t, y, k);
    return reduced[i].lift(shape, theta_start[i] + quad[i].integral_to(t));
  }
};

}  // namespace

std::vector<TangentState> reconstruct(const MechanicalSystem& full_sys, const CyclicStructure& cyc,
                                      const ReducedFlowRecord& reduced, const Vector& theta0,
                                      const NumericsConfig& cfg) {
  const Reconstructor rc(full_sys, cyc, reduced, theta0, cfg);
  std::vector<TangentState> out;
  for (std::size_t i = 0; i < reduced.record.arcs.size(); ++i)
    for (const auto& s : reduced.record.arcs[i].samples) out.push_back(rc.at(reduced, i, s.t));
  return out;
}

std::vector<TangentState> reconstruct_at(const MechanicalSystem& full_sys,
                                         const CyclicStructure& cyc,
                                         const ReducedFlowRecord& reduced, const Vector& theta0,
                                         std::span<const double> times,
                                         const NumericsConfig& cfg) {
  const Reconstructor rc(full_sys, cyc, reduced, theta0, cfg);
  const auto& arcs = reduced.record.arcs;
  if (arcs.empty()) throw ValidationError("reduced record has no arcs");
  std::vector<TangentState> out;
  out.reserve(times.size());
  for (double t : times) {
    std::size_t i = 0;
    while (i + 1 < arcs.size() && arcs[i + 1].t_begin() <= t) ++i;
    out.push_back(rc.at(reduced, i, t));
  }
  return out;
}

// --- classification ------------------------------------------------------------------

const char* to_string(MomentumVerdict v) {
  switch (v) {
    case MomentumVerdict::hybrid:
      return "hybrid";
    case MomentumVerdict::generalized:
      return "generalized";
    case MomentumVerdict::neither:
      return "neither";
  }
  return "unknown";
}

namespace {

double scaled_distance(const Vector& a, const Vector& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

ClassificationReport classify_momentum_map(const HybridSystem& hs, const HybridFlowRecord& record,
                                           const MomentumMapFn& J, const ProbeSampler& sampler,
                                           const NumericsConfig& cfg, int probes_per_level,
                                           double tol) {
  if (record.events.empty()) throw std::invalid_argument("classification needs at least one impact");
  ClassificationReport rep;
  rep.probes_per_level = probes_per_level;
  std::mt19937_64 rng(cfg.seed);

  for (const auto& ev : record.events) {
    EventMomentum em{ev.tau, ev.guard_label, J(ev.pre_state), J(ev.post_state)};
    if (em.mu_pre.size() != em.mu_post.size()) rep.isotropy_preserved = false;
    rep.max_momentum_jump = std::max(rep.max_momentum_jump, scaled_distance(em.mu_pre, em.mu_post));

    std::vector<Vector> probe_post;
    for (int p = 0; p < probes_per_level; ++p) {
      const TangentState pre = sampler(ev.guard_label, em.mu_pre, ev.tau, rng);
      if (scaled_distance(J(pre), em.mu_pre) > tol)
        throw std::logic_error("probe sampler returned a state off the requested momentum level");
      const Vector post = J(apply_impact(hs, ev.guard_label, pre, cfg));
      if (post.size() != em.mu_pre.size()) rep.isotropy_preserved = false;
      rep.max_momentum_jump = std::max(rep.max_momentum_jump, scaled_distance(em.mu_pre, post));
      probe_post.push_back(post);
    }
    for (std::size_t i = 1; i < probe_post.size(); ++i)
      rep.max_level_set_violation =
          std::max(rep.max_level_set_violation, scaled_distance(probe_post[i], probe_post[0]));
    rep.events.push_back(std::move(em));
  }

  if (rep.max_momentum_jump <= tol)
    rep.verdict = MomentumVerdict::hybrid;
  else if (rep.max_level_set_violation <= tol)
    rep.verdict = MomentumVerdict::generalized;
  else
    rep.verdict = MomentumVerdict::neither;
  return rep;
}

HybridConstantReport check_hybrid_constant(const HybridFlowRecord& record, const StateFunction& f,
                                           double tol) {
  HybridConstantReport rep;
  for (const auto& arc : record.arcs) {
    if (arc.samples.empty()) continue;
    const double f0 = f(arc.samples.front());
    const double scale = std::max(1.0, std::abs(f0));
    for (const auto& s : arc.samples) rep.max_drift = std::max(rep.max_drift, std::abs(f(s) - f0) / scale);
  }
  for (const auto& ev : record.events) {
    const double a = f(ev.pre_state);
    const double b = f(ev.post_state);
    rep.max_jump = std::max(rep.max_jump, std::abs(b - a) / std::max(1.0, std::abs(a)));
  }
  rep.is_hybrid_constant = rep.max_drift <= tol && rep.max_jump <= tol;
  return rep;
}

// --- symmetry check -------------------------------------------------------------------

SymmetryReport check_symmetry(const MechanicalSystem& sys, const VectorFieldFn& X,
                              std::span<const TangentState> samples, const NumericsConfig& cfg,
                              double horizon, double tol) {
  sys.validate();
  SymmetryReport rep;
  for (const auto& s : samples) {
    const Vector xq = X(s.q);
    // Complete lift: X^i d/dq^i + (dX^i/dq^j) v^j d/dv^i.
    Vector lifted = Vector::Zero(sys.n);
    Vector qp = s.q;
    for (int j = 0; j < sys.n; ++j) {
      const double h = fd_step_for(s.q[j], cfg.fd_step);
      qp[j] = s.q[j] + h;
      const Vector plus = X(qp);
      qp[j] = s.q[j] - h;
      const Vector minus = X(qp);
      qp[j] = s.q[j];
      lifted += (plus - minus) / (2.0 * h) * s.v[j];
    }
    const Vector p = legendre_forward(sys, s).p;
    const double xc_l = lagrangian_dq(sys, s, cfg).dot(xq) + p.dot(lifted);
    const double f_xc = force_at(sys, s.t, s.q, s.v).dot(xq);
    const double r = xc_l - f_xc;
    rep.residuals.push_back(r);
    rep.max_residual = std::max(rep.max_residual, std::abs(r));
  }

  if (!samples.empty() && horizon > 0.0) {
    const TangentState& s0 = samples.front();
    const int n = sys.n;
    OdeRhs rhs = [&sys, &cfg, n](double t, const Vector& y) {
      const StateDerivative d = forced_el_field(sys, tangent_from_phase(t, y, n), cfg);
      Vector out(2 * n);
      out << d.dq, d.dv_or_dp;
      return out;
    };
    std::vector<engine::Arming> arming;
    const engine::PhaseArc arc = engine::integrate(rhs, {}, s0.t, to_phase(s0), s0.t + horizon, cfg, arming);
    if (arc.failed) throw IntegrationError(arc.message);
    auto lifted_momentum = [&](double t, const Vector& y) {
      const TangentState s = tangent_from_phase(t, y, n);
      return legendre_forward(sys, s).p.dot(X(s.q));
    };
    const double f0 = lifted_momentum(s0.t, to_phase(s0));
    for (std::size_t i = 0; i < arc.knot_t.size(); ++i)
      rep.max_drift = std::max(rep.max_drift, std::abs(lifted_momentum(arc.knot_t[i], arc.knot_y[i]) - f0));
  }
  rep.is_symmetry = rep.max_residual <= tol;
  return rep;
}

}  // namespace hymech
