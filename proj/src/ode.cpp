#include "hymech/ode.hpp"

#include <algorithm>
#include <cmath>

namespace hymech {

namespace {

// Dormand & Prince (1980) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Continuous extension coefficients (Hairer, Norsett & Wanner, dopri5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

}  // namespace

Vector DenseStep::eval(double t) const {
  const double s = (t - t0) / h;
  const double s1 = 1.0 - s;
  return r1 + s * (r2 + s1 * (r3 + s * (r4 + s1 * r5)));
}

DenseTrajectory::DenseTrajectory(double t0, Vector y0)
    : t_begin_(t0), t_end_(t0), y_begin_(std::move(y0)) {}

void DenseTrajectory::push(DenseStep step) {
  t_end_ = step.t1();
  steps_.push_back(std::move(step));
}

void DenseTrajectory::truncate(double t) {
  t = std::clamp(t, t_begin_, t_end_);
  while (!steps_.empty() && steps_.back().t0 >= t && steps_.size() > 1) steps_.pop_back();
  t_end_ = t;
}

Vector DenseTrajectory::eval(double t) const {
  if (steps_.empty() || t <= t_begin_) return y_begin_;
  t = std::min(t, t_end_);
  auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                             [](double value, const DenseStep& s) { return value < s.t0; });
  if (it != steps_.begin()) --it;
  return it->eval(t);
}

DormandPrince::DormandPrince(OdeRhs rhs, double rel_tol, double abs_tol)
    : rhs_(std::move(rhs)), rel_tol_(rel_tol), abs_tol_(abs_tol) {}

StepResult DormandPrince::attempt(double t, const Vector& y, const Vector& k1, double h) const {
  const Vector k2 = rhs_(t + c2 * h, y + h * (a21 * k1));
  const Vector k3 = rhs_(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
  const Vector k4 = rhs_(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
  const Vector k5 = rhs_(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
  const Vector k6 =
      rhs_(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
  Vector y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
  Vector k7 = rhs_(t + h, y1);

  const Vector err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = abs_tol_ + rel_tol_ * std::max(std::abs(y[i]), std::abs(y1[i]));
    const double r = err_vec[i] / sc;
    acc += r * r;
  }
  StepResult out;
  out.err = std::sqrt(acc / static_cast<double>(y.size()));

  DenseStep& d = out.dense;
  d.t0 = t;
  d.h = h;
  d.r1 = y;
  d.r2 = y1 - y;
  d.r3 = h * k1 - d.r2;
  d.r4 = d.r2 - h * k7 - d.r3;
  d.r5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
  out.y1 = std::move(y1);
  out.k_last = std::move(k7);
  return out;
}

double DormandPrince::initial_step(double t, const Vector& y, const Vector& k1,
                                   double span) const {
  // Hairer's starting-step heuristic.
  double d0 = 0.0, d1n = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = abs_tol_ + rel_tol_ * std::abs(y[i]);
    d0 += (y[i] / sc) * (y[i] / sc);
    d1n += (k1[i] / sc) * (k1[i] / sc);
  }
  const double n = static_cast<double>(y.size());
  d0 = std::sqrt(d0 / n);
  d1n = std::sqrt(d1n / n);
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  const Vector k2 = rhs_(t + h0, y + h0 * k1);
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double sc = abs_tol_ + rel_tol_ * std::abs(y[i]);
    const double r = (k2[i] - k1[i]) / sc;
    d2 += r * r;
  }
  d2 = std::sqrt(d2 / n) / h0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span});
}

double DormandPrince::step_factor(double err) {
  if (err == 0.0) return 5.0;
  return std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
}

}  // namespace hymech
