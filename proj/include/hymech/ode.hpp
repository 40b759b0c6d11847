#pragma once

// Dormand-Prince 5(4) with the standard fourth-order continuous extension.

#include <functional>
#include <vector>

#include "hymech/numerics.hpp"

namespace hymech {

using OdeRhs = std::function<Vector(double t, const Vector& y)>;

/// One accepted step and its interpolant on [t0, t0 + h].
struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vector r1, r2, r3, r4, r5;

  double t1() const { return t0 + h; }
  Vector eval(double t) const;
};

/// Piecewise dense output of one continuous arc, valid on [t_begin, t_end].
class DenseTrajectory {
 public:
  DenseTrajectory() = default;
  DenseTrajectory(double t0, Vector y0);

  void push(DenseStep step);
  /// Restricts the valid range to [t_begin, t] (used when an event cuts an arc).
  void truncate(double t);

  double t_begin() const { return t_begin_; }
  double t_end() const { return t_end_; }
  const Vector& y_begin() const { return y_begin_; }
  const std::vector<DenseStep>& steps() const { return steps_; }
  bool empty() const { return steps_.empty(); }

  /// Interpolated state; clamps t into [t_begin, t_end].
  Vector eval(double t) const;

 private:
  double t_begin_ = 0.0;
  double t_end_ = 0.0;
  Vector y_begin_;
  std::vector<DenseStep> steps_;
};

struct StepResult {
  DenseStep dense;
  Vector y1;
  Vector k_last;  // FSAL derivative at t0 + h
  double err = 0.0;
};

class DormandPrince {
 public:
  DormandPrince(OdeRhs rhs, double rel_tol, double abs_tol);

  /// Attempts one step of size h from (t, y) with derivative k1 at (t, y).
  StepResult attempt(double t, const Vector& y, const Vector& k1, double h) const;
  double initial_step(double t, const Vector& y, const Vector& k1, double direction_span) const;
  /// Step-size factor for the next attempt given a normalized error.
  static double step_factor(double err);

  const OdeRhs& rhs() const { return rhs_; }

 private:
  OdeRhs rhs_;
  double rel_tol_;
  double abs_tol_;
};

}  // namespace hymech
