#include "hymech/engine.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace hymech::engine {

namespace {

constexpr int kSubdivisions = 4;

struct ScanResult {
  std::optional<Hit> hit;
  Arming arming;
};

/// Bisection for the last time in [lo, hi] with phi >= 0, given phi(lo) >= 0 > phi(hi).
/// Stops early once `done(t)` holds at a point with phi >= 0.
template <class Phi, class Done>
double bisect(Phi&& phi, Done&& done, double lo, double hi, int max_iter) {
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double value = phi(mid);
    if (value >= 0.0) {
      lo = mid;
      if (done(mid)) return mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

ScanResult scan_guard(const PhaseGuard& g, int index, const DenseStep& step, double t1,
                      const std::array<double, kSubdivisions + 1>& times,
                      const std::array<double, kSubdivisions + 1>& values, double limit,
                      Arming arming, const NumericsConfig& cfg) {
  const double tol = cfg.event_tol;
  auto eval_y = [&](double t) { return t >= t1 ? step.eval(step.t1()) : step.eval(t); };
  auto h_at = [&](double t) { return g.h(t, eval_y(t)); };

  for (int j = 0; j < kSubdivisions; ++j) {
    if (times[j] >= limit) break;
    const double a = times[j], b = times[j + 1];
    const double ha = values[j], hb = values[j + 1];
    switch (arming) {
      case Arming::armed:
        if (ha > 0.0 && hb <= 0.0) {
          double ts;
          if (std::abs(hb) <= tol) {
            // Prefer the interior root when the end point is merely within tolerance.
            ts = bisect(h_at, [&](double t) { return std::abs(h_at(t)) <= tol; }, a, b,
                        cfg.max_bisections);
            if (std::abs(h_at(ts)) > tol) ts = b;
          } else {
            ts = bisect(h_at, [&](double t) { return std::abs(h_at(t)) <= tol; }, a, b,
                        cfg.max_bisections);
          }
          Vector ys = eval_y(ts);
          if (g.approach(ts, ys) < 0.0) return {Hit{index, ts, std::move(ys), false}, arming};
          arming = Arming::inactive;
        }
        break;
      case Arming::cooling:
        if (hb < -2.0 * tol) {
          double ts = a;
          if (ha >= -tol) {
            auto phi = [&](double t) { return h_at(t) + tol; };
            ts = bisect(phi, [&](double t) { return phi(t) < tol; }, a, b, cfg.max_bisections);
          }
          return {Hit{index, ts, eval_y(ts), true}, arming};
        }
        if (hb > 2.0 * tol) arming = Arming::armed;
        break;
      case Arming::inactive:
        if (hb > 2.0 * tol) arming = Arming::armed;
        break;
    }
  }
  return {std::nullopt, arming};
}

}  // namespace

std::vector<Arming> initial_arming(const std::vector<PhaseGuard>& guards, double t0,
                                   const Vector& y0, const NumericsConfig& cfg,
                                   const std::vector<std::string>& labels) {
  std::vector<Arming> arming;
  arming.reserve(guards.size());
  for (std::size_t i = 0; i < guards.size(); ++i) {
    const double h0 = guards[i].h(t0, y0);
    const std::string& name = i < labels.size() ? labels[i] : std::to_string(i);
    if (!std::isfinite(h0)) throw ValidationError("guard '" + name + "' is not finite at the initial state");
    if (h0 < -cfg.event_tol)
      throw ValidationError("initial state lies outside the domain of guard '" + name + "'");
    if (h0 > cfg.event_tol) {
      arming.push_back(Arming::armed);
    } else {
      if (guards[i].approach(t0, y0) < 0.0)
        throw ValidationError("initial state is on guard '" + name + "' with admissible approach");
      arming.push_back(Arming::inactive);
    }
  }
  return arming;
}

PhaseArc integrate(const OdeRhs& rhs, const std::vector<PhaseGuard>& guards, double t0,
                   const Vector& y0, double t_end, const NumericsConfig& cfg,
                   std::vector<Arming>& arming) {
  PhaseArc out;
  out.dense = DenseTrajectory(t0, y0);
  out.knot_t.push_back(t0);
  out.knot_y.push_back(y0);
  if (!(t_end > t0)) return out;

  try {
    DormandPrince dp(rhs, cfg.rel_tol, cfg.abs_tol);
    Vector y = y0;
    Vector k1 = rhs(t0, y);
    if (!k1.allFinite()) throw NonFiniteError("non-finite vector field at arc start");
    double t = t0;
    double h = std::min(dp.initial_step(t, y, k1, t_end - t0), cfg.max_step);

    while (t < t_end) {
      bool last = false;
      h = std::min(h, cfg.max_step);
      if (t + h >= t_end || t_end - (t + h) < 1e-12 * std::max(1.0, std::abs(t_end))) {
        h = t_end - t;
        last = true;
      }
      StepResult step = dp.attempt(t, y, k1, h);
      if (!step.y1.allFinite() || !std::isfinite(step.err) || step.err > 1.0) {
        const double factor = std::isfinite(step.err) && step.y1.allFinite()
                                  ? std::min(0.9, DormandPrince::step_factor(step.err))
                                  : 0.25;
        h *= factor;
        if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
          throw IntegrationError("step-size underflow at t=" + std::to_string(t));
        continue;
      }
      const double t1 = last ? t_end : t + h;

      std::array<double, kSubdivisions + 1> times{};
      for (int j = 0; j <= kSubdivisions; ++j) times[j] = t + h * j / kSubdivisions;
      times[kSubdivisions] = t1;

      std::optional<Hit> best;
      std::vector<Arming> next = arming;
      std::vector<std::array<double, kSubdivisions + 1>> values(guards.size());
      for (std::size_t gi = 0; gi < guards.size(); ++gi) {
        for (int j = 0; j <= kSubdivisions; ++j) {
          const Vector yj = j == 0 ? y : (j == kSubdivisions ? step.y1 : step.dense.eval(times[j]));
          values[gi][j] = guards[gi].h(times[j], yj);
          if (!std::isfinite(values[gi][j])) throw NonFiniteError("non-finite guard value");
        }
        ScanResult r = scan_guard(guards[gi], static_cast<int>(gi), step.dense, t1, times,
                                  values[gi], t1, arming[gi], cfg);
        next[gi] = r.arming;
        if (r.hit && (!best || r.hit->t < best->t)) best = std::move(r.hit);
      }

      out.dense.push(step.dense);
      if (best) {
        // Arming of the other guards is only advanced up to the hit time.
        for (std::size_t gi = 0; gi < guards.size(); ++gi) {
          if (static_cast<int>(gi) == best->guard) continue;
          next[gi] = scan_guard(guards[gi], static_cast<int>(gi), step.dense, t1, times, values[gi],
                                best->t, arming[gi], cfg)
                         .arming;
        }
        arming = std::move(next);
        out.dense.truncate(best->t);
        out.knot_t.push_back(best->t);
        out.knot_y.push_back(best->y);
        out.hit = std::move(best);
        return out;
      }
      arming = std::move(next);
      out.knot_t.push_back(t1);
      out.knot_y.push_back(step.y1);
      t = t1;
      y = std::move(step.y1);
      k1 = std::move(step.k_last);
      h *= DormandPrince::step_factor(step.err);
    }
  } catch (const std::exception& e) {
    out.failed = true;
    out.message = e.what();
  }
  return out;
}

}  // namespace hymech::engine
