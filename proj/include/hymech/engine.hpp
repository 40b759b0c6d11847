#pragma once

// Event-aware arc integration on raw phase vectors. Shared by the Lagrangian,
// Hamiltonian and reduced runners.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hymech/numerics.hpp"
#include "hymech/ode.hpp"

namespace hymech::engine {

struct PhaseGuard {
  std::function<double(double t, const Vector& y)> h;
  std::function<double(double t, const Vector& y)> approach;
};

enum class Arming {
  armed,
  /// Just fired; leaving the band on the far side is an immediate re-impact.
  cooling,
  /// Crossed without admissible approach; re-armed once h > 2 event_tol.
  inactive,
};

struct Hit {
  int guard = -1;
  double t = 0.0;
  Vector y;
  /// The state left through the guard without leaving its event band.
  bool chattering = false;
};

struct PhaseArc {
  DenseTrajectory dense;
  std::vector<double> knot_t;
  std::vector<Vector> knot_y;
  std::optional<Hit> hit;
  bool failed = false;
  std::string message;
};

/// Initial arming of every guard at (t0, y0). Throws ValidationError if y0 is
/// outside a guard's domain or on it with admissible approach.
std::vector<Arming> initial_arming(const std::vector<PhaseGuard>& guards, double t0,
                                   const Vector& y0, const NumericsConfig& cfg,
                                   const std::vector<std::string>& labels);

/// Integrates from (t0, y0) to t_end or the first admissible crossing.
/// `arming` is updated in place as guards leave and re-enter their bands.
PhaseArc integrate(const OdeRhs& rhs, const std::vector<PhaseGuard>& guards, double t0,
                   const Vector& y0, double t_end, const NumericsConfig& cfg,
                   std::vector<Arming>& arming);

}  // namespace hymech::engine
