#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace hymech {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerances and step controls shared by every module.
struct NumericsConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double event_tol = 1e-10;
  double zeno_gap = 1e-7;
  std::int64_t max_impacts = 1'000'000;
  double fd_step = 1e-6;
  std::uint64_t seed = 0;

  int max_bisections = 200;
  double cond_cap = 1e12;
  double max_step = std::numeric_limits<double>::infinity();

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RegularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Central-difference step for a coordinate of magnitude |x|.
inline double fd_step_for(double x, double base) { return base * std::max(1.0, std::abs(x)); }

}  // namespace hymech
