#include "hymech/models.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hymech::models {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(xs.size());
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<Matrix> zero_partials(int n) { return std::vector<Matrix>(n, Matrix::Zero(n, n)); }

double polar_radius(double x, double y) {
  const double r = std::hypot(x, y);
  if (r < kChartMinRadius) throw ChartError("polar chart undefined at r < 1e-9");
  return r;
}

void check_radius(double r) {
  if (!(r >= kChartMinRadius)) throw ChartError("polar chart undefined at r < 1e-9");
}

// (r, theta, rdot, thetadot) <-> (x, y, xdot, ydot)
struct Planar {
  double x, y, xd, yd;
};

Planar polar_to_planar(double r, double th, double rd, double thd) {
  const double c = std::cos(th), s = std::sin(th);
  return {r * c, r * s, rd * c - r * thd * s, rd * s + r * thd * c};
}

struct PolarPair {
  double r, th, rd, thd;
};

PolarPair planar_to_polar(double x, double y, double xd, double yd) {
  const double r = polar_radius(x, y);
  return {r, std::atan2(y, x), (x * xd + y * yd) / r, (x * yd - y * xd) / (r * r)};
}

}  // namespace

// --- parameters ----------------------------------------------------------------

void DiskParams::validate() const {
  require(std::isfinite(m) && m > 0.0, "disk: m must be positive");
  require(std::isfinite(R) && R > 0.0, "disk: R must be positive");
  require(std::isfinite(k) && k > 0.0, "disk: k must be positive");
  require(std::isfinite(c) && c > 0.0, "disk: c must be positive");
  require(std::isfinite(e) && e >= 0.0 && e <= 1.0, "disk: e must lie in [0, 1]");
  require(std::isfinite(alpha) && alpha > 1.0, "disk: alpha must exceed 1");
  require(rolling_band > 0.0, "disk: rolling_band must be positive");
  require(static_cast<bool>(wall) == static_cast<bool>(wall_dot),
          "disk: wall and wall_dot must be given together");
  if (wall) {
    require(e == 1.0, "disk: the moving-wall variant uses e = 1");
    require(probe_horizon > 0.0, "disk: probe_horizon must be positive");
    constexpr int kProbes = 1000;
    for (int i = 0; i <= kProbes; ++i) {
      const double t = probe_horizon * i / kProbes;
      const double f = wall(t);
      require(std::isfinite(f) && std::isfinite(wall_dot(t)), "disk: wall function is not finite");
      require(f >= alpha * R - 1e-12, "disk: moving wall must satisfy f(t) >= alpha R");
    }
  }
}

DiskParams moving_wall_disk(DiskParams p, double amplitude, double omega) {
  require(amplitude >= 0.0, "disk: wall amplitude must be non-negative");
  const double base = p.alpha * p.R;
  p.wall = [base, amplitude, omega](double t) { return base + amplitude * (1.0 - std::cos(omega * t)); };
  p.wall_dot = [amplitude, omega](double t) { return amplitude * omega * std::sin(omega * t); };
  return p;
}

void BilliardParams::validate() const {
  require(std::isfinite(m) && m > 0.0, "billiard: m must be positive");
  require(std::isfinite(c) && c > 0.0, "billiard: c must be positive");
  require(static_cast<bool>(f) && static_cast<bool>(fdot), "billiard: f and fdot are required");
  const double f0 = f(0.0);
  require(std::isfinite(f0) && f0 > 0.0, "billiard: f(0) must be positive");
}

bool BilliardParams::wall_increasing(double horizon) const {
  constexpr int kProbes = 1000;
  for (int i = 0; i <= kProbes; ++i)
    if (fdot(horizon * i / kProbes) < 0.0) return false;
  return true;
}

BilliardParams default_billiard(double c) {
  BilliardParams p;
  p.c = c;
  p.f = [](double t) { return 2.0 - std::exp(t / 10.0); };
  p.fdot = [](double t) { return -0.1 * std::exp(t / 10.0); };
  return p;
}

void ParticleParams::validate() const {
  require(std::isfinite(m) && m > 0.0, "particle: m must be positive");
  require(std::isfinite(g) && g >= 0.0, "particle: g must be non-negative");
  require(std::isfinite(wall), "particle: wall must be finite");
  require(std::isfinite(e) && e >= 0.0 && e <= 1.0, "particle: e must lie in [0, 1]");
}

// --- rolling disk -----------------------------------------------------------------

Model build_rolling_disk(const DiskParams& p) {
  p.validate();
  const double m = p.m, R = p.R, k = p.k, c = p.c, e = p.e;
  const double k2 = k * k;
  const bool moving = static_cast<bool>(p.wall);
  const double fixed_top = p.alpha * R;
  const TimeFn top = moving ? p.wall : TimeFn([fixed_top](double) { return fixed_top; });
  const TimeFn top_dot = moving ? p.wall_dot : TimeFn([](double) { return 0.0; });

  Model model;
  model.name = moving ? "disk_moving" : "disk_fixed";
  model.has_symmetry = true;

  // Cartesian (x, y, vartheta).
  MechanicalSystem cart;
  cart.n = 3;
  cart.coordinate_labels = {"x", "y", "vartheta"};
  cart.mass = [m, k2](double, const Vector&) { return Matrix(Eigen::Vector3d(m, m, m * k2).asDiagonal()); };
  cart.potential = [](double, const Vector&) { return 0.0; };
  cart.force = [c](double, const Vector& q, const Vector& v) {
    const double x = q[0], y = q[1], xd = v[0], yd = v[1];
    return vec({-2.0 * c * (xd * x * y - yd * x * x), 2.0 * c * (yd * x * y - xd * y * y), 0.0});
  };
  cart.mass_dq = [](double, const Vector&) { return zero_partials(3); };
  cart.mass_dt = [](double, const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
  cart.potential_dq = [](double, const Vector&) { return Vector(Vector::Zero(3)); };

  const bool strict = p.strict_rolling;
  const double band = p.rolling_band;
  auto rolling = [strict, band, R](const Vector& v) {
    if (!strict) return true;
    const double scale = std::max({1.0, std::abs(v[0]), std::abs(R * v[2])});
    return std::abs(v[0] - R * v[2]) <= band * scale;
  };

  Guard lower;
  lower.label = "lower";
  lower.h = [R](double, const Vector& q) { return q[1] - R; };
  lower.gradient = [](double, const Vector&) { return vec({0.0, 1.0, 0.0}); };
  lower.h_dt = [](double, const Vector&) { return 0.0; };
  lower.approach = [rolling](double, const Vector&, const Vector& v) {
    return rolling(v) ? v[1] : std::abs(v[1]);
  };

  Guard upper;
  upper.label = "upper";
  upper.time_dependent = moving;
  upper.h = [top, R](double t, const Vector& q) { return top(t) - R - q[1]; };
  upper.gradient = [](double, const Vector&) { return vec({0.0, -1.0, 0.0}); };
  upper.h_dt = [top_dot](double t, const Vector&) { return top_dot(t); };
  upper.approach = [rolling, top_dot](double t, const Vector&, const Vector& v) {
    const double a = top_dot(t) - v[1];
    return rolling(v) ? a : std::abs(a);
  };

  auto wall_map = [R, k2, e](const Vector& v) {
    const double xd = v[0], yd = v[1], td = v[2];
    return vec({(R * R * xd + k2 * R * td) / (k2 + R * R), -e * yd, (R * xd + k2 * td) / (k2 + R * R)});
  };
  CustomImpact cart_impact{[wall_map](double, const Vector&, const Vector& v) { return wall_map(v); }};

  model.cartesian.sys = cart;
  model.cartesian.transitions = {{lower, cart_impact}, {upper, cart_impact}};

  // Polar (r, theta, vartheta).
  auto to_cart = [](const TangentState& s) {
    check_radius(s.q[0]);
    const Planar pl = polar_to_planar(s.q[0], s.q[1], s.v[0], s.v[1]);
    return TangentState{s.t, vec({pl.x, pl.y, s.q[2]}), vec({pl.xd, pl.yd, s.v[2]})};
  };
  auto to_pol = [](const TangentState& s) {
    const PolarPair pp = planar_to_polar(s.q[0], s.q[1], s.v[0], s.v[1]);
    return TangentState{s.t, vec({pp.r, pp.th, s.q[2]}), vec({pp.rd, pp.thd, s.v[2]})};
  };
  model.to_cartesian = to_cart;
  model.to_polar = to_pol;

  MechanicalSystem pol;
  pol.n = 3;
  pol.coordinate_labels = {"r", "theta", "vartheta"};
  pol.mass = [m, k2](double, const Vector& q) {
    check_radius(q[0]);
    return Matrix(Eigen::Vector3d(m, m * q[0] * q[0], m * k2).asDiagonal());
  };
  pol.potential = [](double, const Vector&) { return 0.0; };
  pol.force = [c](double, const Vector& q, const Vector& v) {
    return vec({2.0 * c * q[0] * q[0] * q[0] * v[1], 0.0, 0.0});
  };
  pol.mass_dq = [m](double, const Vector& q) {
    auto d = zero_partials(3);
    d[0](1, 1) = 2.0 * m * q[0];
    return d;
  };
  pol.mass_dt = [](double, const Vector&) { return Matrix(Matrix::Zero(3, 3)); };
  pol.potential_dq = [](double, const Vector&) { return Vector(Vector::Zero(3)); };

  Guard plower;
  plower.label = "lower";
  plower.h = [R](double, const Vector& q) { return q[0] * std::sin(q[1]) - R; };
  plower.gradient = [](double, const Vector& q) {
    return vec({std::sin(q[1]), q[0] * std::cos(q[1]), 0.0});
  };
  plower.h_dt = [](double, const Vector&) { return 0.0; };
  Guard pupper;
  pupper.label = "upper";
  pupper.time_dependent = moving;
  pupper.h = [top, R](double t, const Vector& q) { return top(t) - R - q[0] * std::sin(q[1]); };
  pupper.gradient = [](double, const Vector& q) {
    return vec({-std::sin(q[1]), -q[0] * std::cos(q[1]), 0.0});
  };
  pupper.h_dt = [top_dot](double t, const Vector&) { return top_dot(t); };
  if (strict) {
    plower.approach = [to_cart, a = lower.approach](double t, const Vector& q, const Vector& v) {
      const TangentState s = to_cart({t, q, v});
      return a(t, s.q, s.v);
    };
    pupper.approach = [to_cart, a = upper.approach](double t, const Vector& q, const Vector& v) {
      const TangentState s = to_cart({t, q, v});
      return a(t, s.q, s.v);
    };
  }
  CustomImpact pol_impact{[to_cart, to_pol, wall_map](double t, const Vector& q, const Vector& v) {
    TangentState s = to_cart({t, q, v});
    s.v = wall_map(s.v);
    TangentState back = to_pol(s);
    return back.v;
  }};
  model.polar.sys = pol;
  model.polar.transitions = {{plower, pol_impact}, {pupper, pol_impact}};

  model.cyc = CyclicStructure{{1, 2}, {0}};

  // Reduced reset: lift with the carried phase, apply the wall map, reduce again.
  ReducedImpactFn reduced_impact = [m, k2, to_cart, to_pol, wall_map](
                                       double t, const Vector& x, const Vector& xdot,
                                       const Vector& theta, const MomentumValue& mu) {
    const double r = x[0];
    check_radius(r);
    const TangentState polar_pre{t, vec({r, theta[0], theta[1]}),
                                 vec({xdot[0], mu.mu[0] / (m * r * r), mu.mu[1] / (m * k2)})};
    TangentState s = to_cart(polar_pre);
    s.v = wall_map(s.v);
    const double xx = s.q[0], yy = s.q[1];
    const Vector mu_post = vec({m * (xx * s.v[1] - yy * s.v[0]), m * k2 * s.v[2]});
    return ReducedImpactResult{vec({(xx * s.v[0] + yy * s.v[1]) / r}), MomentumValue{mu_post}};
  };
  model.reduced = ReducedHybridData{model.polar, model.cyc,
                                    {{"lower", reduced_impact}, {"upper", reduced_impact}}};

  model.generators = {[](const Vector& q) { return vec({-q[1], q[0], 0.0}); },
                      [](const Vector&) { return vec({0.0, 0.0, 1.0}); }};
  model.momentum = generator_momentum_map(cart, model.generators);
  model.stated_momentum_update = [](const Vector& mu) { return vec({-mu[0], mu[1]}); };

  // Rolling states on the requested wall with the requested momentum value.
  model.sampler = [m, k2, R, top](const std::string& guard, const Vector& mu, double t,
                                  std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.25, 2.0);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::bernoulli_distribution sign(0.5);
    const double y = guard == "lower" ? R : top(t) - R;
    const double x = (sign(rng) ? 1.0 : -1.0) * mag(rng);
    const double td = mu[1] / (m * k2);
    const double xd = R * td;
    const double yd = (mu[0] / m + y * xd) / x;
    return TangentState{t, vec({x, y, angle(rng)}), vec({xd, yd, td})};
  };
  return model;
}

// --- billiard -------------------------------------------------------------------

Model build_billiard(const BilliardParams& p) {
  p.validate();
  const double m = p.m, c = p.c;
  const TimeFn f = p.f, fdot = p.fdot;
  auto grow = [m, c](double t) { return std::exp(c * t / m); };

  Model model;
  model.name = "billiard";
  model.has_symmetry = true;

  MechanicalSystem cart;
  cart.n = 2;
  cart.time_dependent = true;
  cart.coordinate_labels = {"x", "y"};
  cart.mass = [m, grow](double t, const Vector&) { return Matrix(m * grow(t) * Matrix::Identity(2, 2)); };
  cart.mass_dt = [c, grow](double t, const Vector&) { return Matrix(c * grow(t) * Matrix::Identity(2, 2)); };
  cart.mass_dq = [](double, const Vector&) { return zero_partials(2); };
  cart.potential = [](double, const Vector&) { return 0.0; };
  cart.potential_dq = [](double, const Vector&) { return Vector(Vector::Zero(2)); };
  cart.force = [c, grow](double t, const Vector& q, const Vector& v) {
    const double x = q[0], y = q[1], xd = v[0], yd = v[1];
    const double g = grow(t);
    return vec({-2.0 * c * g * (xd * x * y - yd * x * x), 2.0 * c * g * (yd * x * y - xd * y * y)});
  };

  Guard wall;
  wall.label = "wall";
  wall.time_dependent = true;
  wall.h = [f](double t, const Vector& q) { return f(t) - q.squaredNorm(); };
  wall.gradient = [](double, const Vector& q) { return Vector(-2.0 * q); };
  wall.h_dt = [fdot](double t, const Vector&) { return fdot(t); };
  wall.approach = [fdot](double t, const Vector& q, const Vector& v) {
    return fdot(t) - 2.0 * q.dot(v);
  };
  CustomImpact impact{[f, fdot](double t, const Vector& q, const Vector& v) {
    return Vector(v + (fdot(t) - 2.0 * q.dot(v)) / f(t) * q);
  }};
  model.cartesian.sys = cart;
  model.cartesian.transitions = {{wall, impact}};

  auto to_cart = [](const TangentState& s) {
    check_radius(s.q[0]);
    const Planar pl = polar_to_planar(s.q[0], s.q[1], s.v[0], s.v[1]);
    return TangentState{s.t, vec({pl.x, pl.y}), vec({pl.xd, pl.yd})};
  };
  auto to_pol = [](const TangentState& s) {
    const PolarPair pp = planar_to_polar(s.q[0], s.q[1], s.v[0], s.v[1]);
    return TangentState{s.t, vec({pp.r, pp.th}), vec({pp.rd, pp.thd})};
  };
  model.to_cartesian = to_cart;
  model.to_polar = to_pol;

  MechanicalSystem pol;
  pol.n = 2;
  pol.time_dependent = true;
  pol.coordinate_labels = {"r", "theta"};
  pol.mass = [m, grow](double t, const Vector& q) {
    check_radius(q[0]);
    return Matrix(m * grow(t) * Eigen::Vector2d(1.0, q[0] * q[0]).asDiagonal());
  };
  pol.mass_dt = [c, grow](double t, const Vector& q) {
    return Matrix(c * grow(t) * Eigen::Vector2d(1.0, q[0] * q[0]).asDiagonal());
  };
  pol.mass_dq = [m, grow](double t, const Vector& q) {
    auto d = zero_partials(2);
    d[0](1, 1) = 2.0 * m * grow(t) * q[0];
    return d;
  };
  pol.potential = [](double, const Vector&) { return 0.0; };
  pol.potential_dq = [](double, const Vector&) { return Vector(Vector::Zero(2)); };
  pol.force = [c, grow](double t, const Vector& q, const Vector& v) {
    return vec({2.0 * grow(t) * c * q[0] * q[0] * q[0] * v[1], 0.0});
  };

  Guard pwall;
  pwall.label = "wall";
  pwall.time_dependent = true;
  pwall.h = [f](double t, const Vector& q) { return f(t) - q[0] * q[0]; };
  pwall.gradient = [](double, const Vector& q) { return vec({-2.0 * q[0], 0.0}); };
  pwall.h_dt = [fdot](double t, const Vector&) { return fdot(t); };
  CustomImpact pimpact{[f, fdot](double t, const Vector& q, const Vector& v) {
    return vec({v[0] + (fdot(t) - 2.0 * q[0] * v[0]) * q[0] / f(t), v[1]});
  }};
  model.polar.sys = pol;
  model.polar.transitions = {{pwall, pimpact}};
  model.cyc = CyclicStructure{{1}, {0}};

  // Radial reset with the minus square root; the momentum value is unchanged.
  ReducedImpactFn reduced_impact = [f, fdot](double t, const Vector& x, const Vector& xdot,
                                             const Vector&, const MomentumValue& mu) {
    const double r = x[0], rd = xdot[0], ft = f(t), fd = fdot(t);
    const double w = fd - 2.0 * r * rd;
    const double sq = rd * rd + r / ft * w * (2.0 * rd + w * r / ft);
    return ReducedImpactResult{vec({-std::sqrt(std::max(0.0, sq))}), mu};
  };
  model.reduced = ReducedHybridData{model.polar, model.cyc, {{"wall", reduced_impact}}};

  model.generators = {[](const Vector& q) { return vec({-q[1], q[0]}); }};
  model.momentum = generator_momentum_map(cart, model.generators);
  model.stated_momentum_update = [](const Vector& mu) { return mu; };

  // Outward-moving states on the wall with the requested momentum value.
  model.sampler = [m, grow, f, fdot](const std::string&, const Vector& mu, double t,
                                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> excess(0.1, 3.0);
    const double r = std::sqrt(f(t));
    const double th = angle(rng);
    const double rd = fdot(t) / (2.0 * r) + excess(rng);
    const double thd = mu[0] / (m * grow(t) * r * r);
    const Planar pl = polar_to_planar(r, th, rd, thd);
    return TangentState{t, vec({pl.x, pl.y}), vec({pl.xd, pl.yd})};
  };
  return model;
}

// --- bouncing particle ------------------------------------------------------------

Model build_bouncing_particle(const ParticleParams& p) {
  p.validate();
  const double m = p.m, g = p.g, w = p.wall;
  Model model;
  model.name = "bouncing_particle";
  MechanicalSystem sys;
  sys.n = 1;
  sys.coordinate_labels = {"q"};
  sys.mass = [m](double, const Vector&) { return Matrix(Matrix::Constant(1, 1, m)); };
  sys.potential = [m, g](double, const Vector& q) { return m * g * q[0]; };
  sys.mass_dq = [](double, const Vector&) { return zero_partials(1); };
  sys.mass_dt = [](double, const Vector&) { return Matrix(Matrix::Zero(1, 1)); };
  sys.potential_dq = [m, g](double, const Vector&) { return vec({m * g}); };

  Guard floor;
  floor.label = "wall";
  floor.h = [w](double, const Vector& q) { return q[0] - w; };
  floor.gradient = [](double, const Vector&) { return vec({1.0}); };
  floor.h_dt = [](double, const Vector&) { return 0.0; };
  model.cartesian.sys = sys;
  model.cartesian.transitions = {{floor, NewtonianImpact{p.e}}};
  model.polar = model.cartesian;
  model.to_cartesian = [](const TangentState& s) { return s; };
  model.to_polar = [](const TangentState& s) { return s; };
  return model;
}

}  // namespace hymech::models
