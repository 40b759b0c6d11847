#pragma once

// The worked systems: a rolling disk between two rough walls (fixed or with a
// moving upper wall), a particle in a circular billiard with a moving wall and
// velocity-dependent friction, and a one-dimensional bouncing particle.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hymech/hybrid.hpp"
#include "hymech/symmetry.hpp"

namespace hymech::models {

using TimeFn = std::function<double(double t)>;

struct DiskParams {
  double m = 1.0;
  double R = 0.5;
  double k = 0.35355339059327373;  // R / sqrt(2), homogeneous disk
  double c = 0.1;
  double e = 1.0;
  double alpha = 4.0;
  /// Upper wall height f(t) and its derivative; empty for the fixed wall y = alpha R.
  TimeFn wall;
  TimeFn wall_dot;
  /// Restrict impacts to states with |xdot - R thetadot| <= rolling_band * scale.
  bool strict_rolling = false;
  double rolling_band = 1e-6;
  /// Horizon over which f(t) >= alpha R is probed.
  double probe_horizon = 100.0;

  void validate() const;
};

/// Upper wall alpha R + amplitude (1 - cos(omega t)).
DiskParams moving_wall_disk(DiskParams p, double amplitude, double omega = 1.0);

struct BilliardParams {
  double m = 1.0;
  double c = 0.005;
  /// Squared wall radius f(t) and its derivative; default 2 - exp(t/10).
  TimeFn f;
  TimeFn fdot;
  double probe_horizon = 5.0;

  void validate() const;
  /// True when f is non-decreasing at the probe points of [0, horizon].
  bool wall_increasing(double horizon) const;
};

BilliardParams default_billiard(double c);

/// Particle on a line above a wall at q = wall, pulled toward it by a constant force m g.
struct ParticleParams {
  double m = 1.0;
  double g = 1.0;
  double wall = 0.0;
  double e = 0.0;

  void validate() const;
};

/// Everything the drivers need about one model.
struct Model {
  std::string name;
  /// Simulation coordinates.
  HybridSystem cartesian;
  /// Chart with the cyclic coordinates explicit; same as `cartesian` for models
  /// without symmetry.
  HybridSystem polar;
  bool has_symmetry = false;
  CyclicStructure cyc;
  ReducedHybridData reduced;
  /// Generators of the symmetry on the Cartesian configuration space.
  std::vector<VectorFieldFn> generators;
  MomentumMapFn momentum;
  ProbeSampler sampler;
  /// Momentum relation at impacts as stated for the model (for comparison).
  std::function<Vector(const Vector& mu_pre)> stated_momentum_update;
  std::function<TangentState(const TangentState&)> to_cartesian;
  std::function<TangentState(const TangentState&)> to_polar;
};

Model build_rolling_disk(const DiskParams& p);
Model build_billiard(const BilliardParams& p);
Model build_bouncing_particle(const ParticleParams& p);

/// Polar chart is refused closer than this to the origin.
inline constexpr double kChartMinRadius = 1e-9;

}  // namespace hymech::models
