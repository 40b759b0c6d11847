// Acceptance run: one PASS/FAIL line per criterion, followed by the measured
// quantities. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hymech/scenario.hpp"
#include "oracle.hpp"

using namespace hymech;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector V(std::initializer_list<double> xs) {
  Vector v(xs.size());
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

int failures = 0;

void verdict(int id, const std::string& title, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("criterion %d %s: %s\n", id, ok ? "PASS" : "FAIL", title.c_str());
  std::printf("    %s\n", detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hymech_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

cli::Scenario config(const std::string& file, const std::string& out) {
  cli::Scenario sc = cli::load_scenario(fs::path(HYMECH_SOURCE_DIR) / "configs" / file);
  sc.prefix = (scratch(out) / "run").string();
  return sc;
}

TangentState on_record(const HybridFlowRecord& r, double t, int n) {
  std::size_t i = 0;
  while (i + 1 < r.arcs.size() && r.arcs[i + 1].t_begin() <= t) ++i;
  return state_at(r.arcs[i], t, n);
}

// --- 1 ---------------------------------------------------------------------------

void billiard_reproduction() {
  bool ok = true;
  std::string detail;
  for (const auto& [file, c] : {std::pair{"billiard_c0005.cfg", 0.005}, std::pair{"billiard_c010.cfg", 0.10}}) {
    cli::Scenario sc = config(file, std::string("billiard_") + file);
    const auto t0 = Clock::now();
    const auto out = cli::run_scenario(sc);
    const double runtime = seconds_since(t0);

    const auto model = cli::build_model(sc);
    const auto p = models::default_billiard(c);
    const auto rec = run_hybrid_flow(model.cartesian, cli::initial_state(sc, model), *sc.t_end, sc.numerics);
    double on_wall = 0.0;
    for (const auto& ev : rec.events) on_wall = std::max(on_wall, std::abs(ev.pre_state.q.squaredNorm() - p.f(ev.tau)));
    const double mu0 = model.momentum(rec.arcs.front().front())[0];
    double mu_dev = 0.0;
    for (const auto& arc : rec.arcs)
      for (const auto& s : arc.samples) mu_dev = std::max(mu_dev, rel(model.momentum(s)[0], mu0));
    for (const auto& ev : rec.events) mu_dev = std::max(mu_dev, rel(model.momentum(ev.post_state)[0], mu0));
    const double radius_dev = std::stod(out.value("compare.max_radius_deviation"));

    const bool this_ok = out.exit_code == cli::kSuccess && rec.events.size() >= 2 && on_wall <= 1e-8 &&
                         mu_dev <= 1e-7 && radius_dev <= 1e-5 && runtime < 10.0;
    ok = ok && this_ok;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "c=%.3g: impacts=%zu  max|r^2-f|=%.3g  mu drift=%.3g  radius dev=%.3g  runtime=%.3fs", c,
                  rec.events.size(), on_wall, mu_dev, radius_dev, runtime);
    detail += (detail.empty() ? "" : "\n    ") + std::string(buf);
  }
  verdict(1, "billiard reproduction (impacts on wall, hybrid momentum, reduced radius, runtime)", ok, detail);
}

// --- 2 ---------------------------------------------------------------------------

void disk_generalized_momentum() {
  cli::Scenario sc = config("disk_fixed.cfg", "disk_mu");
  const auto model = cli::build_model(sc);
  const auto rec = run_hybrid_flow(model.cartesian, cli::initial_state(sc, model), *sc.t_end, sc.numerics);

  double mu2_dev = 0.0, mu1_flip = 0.0, slip = 0.0;
  const models::DiskParams dp;
  for (const auto& ev : rec.events) {
    const Vector a = model.momentum(ev.pre_state), b = model.momentum(ev.post_state);
    mu2_dev = std::max(mu2_dev, rel(b[1], a[1]));
    mu1_flip = std::max(mu1_flip, rel(b[0], -a[0]));
    slip = std::max(slip, std::abs(ev.pre_state.v[0] - dp.R * ev.pre_state.v[2]));
  }
  const bool relations = rec.events.size() >= 3 && mu2_dev <= 1e-8 && mu1_flip <= 1e-8;

  // The same relations on rolling states of the switching surface, drawn by the model sampler.
  std::mt19937_64 rng(sc.numerics.seed);
  double s_mu2 = 0.0, s_flip = 0.0, s_corrected = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Vector mu = oracle::random_vector(2, rng, 2.0);
    const char* g = i % 2 == 0 ? "lower" : "upper";
    const TangentState pre = model.sampler(g, mu, 0.0, rng);
    const Vector b = model.momentum(apply_impact(model.cartesian, g, pre));
    s_mu2 = std::max(s_mu2, rel(b[1], mu[1]));
    s_flip = std::max(s_flip, rel(b[0], -mu[0]));
    s_corrected = std::max(s_corrected, rel(b[0], -mu[0] - 2.0 * dp.m * pre.q[1] * pre.v[0]));
  }

  auto classify = [](const models::Model& m, const cli::Scenario& s, NumericsConfig cfg) {
    const auto r = run_hybrid_flow(m.cartesian, cli::initial_state(s, m), *s.t_end, cfg);
    return classify_momentum_map(m.cartesian, r, m.momentum, m.sampler, cfg).verdict;
  };
  cli::Scenario bsc = config("billiard_c0005.cfg", "billiard_classify");
  const auto bmodel = cli::build_model(bsc);
  NumericsConfig fine = sc.numerics;
  fine.rel_tol /= 10;
  fine.abs_tol /= 10;
  const auto dv = classify(model, sc, sc.numerics), dv_fine = classify(model, sc, fine);
  const auto bv = classify(bmodel, bsc, bsc.numerics), bv_fine = classify(bmodel, bsc, fine);
  const bool verdicts = dv == MomentumVerdict::generalized && dv_fine == dv && bv == MomentumVerdict::hybrid &&
                        bv_fine == bv;

  char buf[768];
  std::snprintf(buf, sizeof buf,
                "impacts=%zu  max rel|mu2+ - mu2-|=%.3g  max rel|mu1+ + mu1-|=%.3g  (tolerance 1e-8)\n"
                "    pre-impact slip max|xdot - R thetadot|=%.3g\n"
                "    rolling states on the walls: rel mu2 change=%.3g  rel|mu1+ + mu1-|=%.3g  "
                "rel|mu1+ + mu1- + 2m y xdot-|=%.3g\n"
                "    verdicts: disk %s (tol/10: %s), billiard %s (tol/10: %s)",
                rec.events.size(), mu2_dev, mu1_flip, slip, s_mu2, s_flip, s_corrected, to_string(dv),
                to_string(dv_fine), to_string(bv), to_string(bv_fine));
  verdict(2, "disk generalized momentum (mu2 constant, mu1 flips) and classification verdicts",
          relations && verdicts, buf);
}

// --- 3 ---------------------------------------------------------------------------

void newtonian_laws() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NumericsConfig cfg;
  double energy_elastic = 0.0, energy_gain = 0.0, tangential = 0.0, idempotent = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 5;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = 2.0 * u(rng) - 1.0;
    const Matrix m = a * a.transpose() + 0.2 * Matrix::Identity(n, n);
    MechanicalSystem sys;
    sys.n = n;
    sys.mass = [m](double, const Vector&) { return m; };
    sys.potential = [](double, const Vector&) { return 0.0; };
    const Vector normal = oracle::random_vector(n, rng) + 0.05 * Vector::Ones(n);
    Guard g;
    g.label = "g";
    g.h = [normal](double, const Vector& q) { return normal.dot(q); };
    const Vector v = oracle::random_vector(n, rng, 3.0);
    const double e = trial % 10 == 0 ? 1.0 : (trial % 10 == 1 ? 0.0 : u(rng));
    const Vector vp = newtonian_impact(sys, g, e, {0.0, Vector::Zero(n), v}, cfg).v;

    const double k0 = 0.5 * v.dot(m * v), k1 = 0.5 * vp.dot(m * vp);
    if (e == 1.0)
      energy_elastic = std::max(energy_elastic, std::abs(k1 - k0) / k0);
    else
      energy_gain = std::max(energy_gain, (k1 - k0) / k0);
    // v+ = v- minus a multiple of M^{-1} dh, with the normal component scaled by -e.
    const Vector w = m.llt().solve(normal);
    const Vector dv = vp - v;
    const double scale = std::max(1.0, v.norm() * std::max(1.0, normal.norm()));
    tangential = std::max(tangential, (dv - w * (w.dot(dv) / w.dot(w))).norm() / scale);
    tangential = std::max(tangential, std::abs(normal.dot(vp) + e * normal.dot(v)) / scale);
    if (e == 0.0) {
      const Vector twice = newtonian_impact(sys, g, 0.0, {0.0, Vector::Zero(n), vp}, cfg).v;
      idempotent = std::max(idempotent, (twice - vp).norm() / std::max(1.0, vp.norm()));
    }
  }
  const bool ok = energy_elastic <= 1e-10 && energy_gain <= 1e-14 && tangential <= 1e-12 && idempotent <= 1e-12;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "1000 cases: elastic energy error=%.3g  inelastic max gain=%.3g  decomposition residual=%.3g  "
                "e=0 idempotence=%.3g",
                energy_elastic, energy_gain, tangential, idempotent);
  verdict(3, "Newtonian impact laws", ok, buf);
}

// --- 4 ---------------------------------------------------------------------------

void legendre_conjugacy() {
  bool ok = true;
  std::string detail;
  for (const char* file : {"disk_fixed.cfg", "billiard_c0005.cfg"}) {
    const cli::Scenario sc = config(file, std::string("conj_") + file);
    const auto model = cli::build_model(sc);
    const auto& hs = model.cartesian;
    const TangentState s0 = cli::initial_state(sc, model);
    const auto& cfg = sc.numerics;
    const auto lag = run_hybrid_flow(hs, s0, *sc.t_end, cfg);
    const auto ham = run_hybrid_flow_hamiltonian(hs, legendre_forward(hs.sys, s0), *sc.t_end, cfg);
    double tau_dev = 0.0, state_dev = 0.0;
    const bool same_count = lag.events.size() == ham.events.size();
    if (same_count) {
      for (std::size_t i = 0; i < lag.events.size(); ++i) {
        tau_dev = std::max(tau_dev, std::abs(lag.events[i].tau - ham.events[i].tau));
        for (auto [l, h] : {std::pair{&lag.events[i].pre_state, &ham.events[i].pre_state},
                            std::pair{&lag.events[i].post_state, &ham.events[i].post_state}}) {
          const CotangentState fl = legendre_forward(hs.sys, *l);
          state_dev = std::max(state_dev, std::max((fl.q - h->q).cwiseAbs().maxCoeff(),
                                                   (fl.p - h->p).cwiseAbs().maxCoeff()));
        }
      }
      const double t_lo = lag.arcs.front().t_begin(), t_hi = std::min(lag.arcs.back().t_end(), ham.arcs.back().t_end());
      for (int k = 0; k <= 400; ++k) {
        const double t = t_lo + (t_hi - t_lo) * k / 400.0;
        std::size_t i = 0;
        while (i + 1 < ham.arcs.size() && ham.arcs[i + 1].t_begin() <= t) ++i;
        const CotangentState h = state_at(ham.arcs[i], t, hs.sys.n);
        const CotangentState fl = legendre_forward(hs.sys, on_record(lag, t, hs.sys.n));
        // Grid times falling between the two records' impact times compare a pre- with a post-impact state.
        bool straddles = false;
        for (std::size_t j = 0; j < lag.events.size(); ++j)
          straddles = straddles || (t - lag.events[j].tau) * (t - ham.events[j].tau) < 0.0;
        if (straddles) continue;
        state_dev = std::max(state_dev, std::max((fl.q - h.q).cwiseAbs().maxCoeff(), (fl.p - h.p).cwiseAbs().maxCoeff()));
      }
    }
    const bool this_ok = same_count && !lag.events.empty() && tau_dev <= 1e-8 && state_dev <= 1e-6;
    ok = ok && this_ok;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: impacts=%zu/%zu  max impact-time dev=%.3g  max state dev=%.3g", model.name.c_str(),
                  lag.events.size(), ham.events.size(), tau_dev, state_dev);
    detail += (detail.empty() ? "" : "\n    ") + std::string(buf);
  }
  verdict(4, "Legendre conjugacy of Lagrangian and Hamiltonian hybrid records", ok, detail);
}

// --- 5 ---------------------------------------------------------------------------

struct Case {
  std::string name;
  models::Model model;
  std::function<TangentState(std::mt19937_64&)> draw;
  double max_horizon;
};

std::vector<Case> reference_cases() {
  std::vector<Case> out;
  for (double c : {0.005, 0.10}) {
    out.push_back({"billiard c=" + fmt("%g", c), models::build_billiard(models::default_billiard(c)),
                   [](std::mt19937_64& rng) {
                     std::uniform_real_distribution<double> r(0.2, 0.9), th(-3.1, 3.1), sp(-3.0, 3.0);
                     const double rr = r(rng), a = th(rng), rd = sp(rng), thd = sp(rng);
                     return TangentState{0.0, V({rr * std::cos(a), rr * std::sin(a)}),
                                         V({rd * std::cos(a) - rr * thd * std::sin(a), rd * std::sin(a) + rr * thd * std::cos(a)})};
                   },
                   5.0});
  }
  auto disk_draw = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> x(0.5, 2.0), y(0.6, 1.4), sp(-1.5, 1.5), yd(0.4, 1.5), th(-3.0, 3.0);
    std::bernoulli_distribution up(0.5);
    const double vy = up(rng) ? yd(rng) : -yd(rng);
    return TangentState{0.0, V({x(rng), y(rng), th(rng)}), V({sp(rng), vy, sp(rng)})};
  };
  out.push_back({"disk_fixed", models::build_rolling_disk({}), disk_draw, 20.0});
  out.push_back({"disk_moving", models::build_rolling_disk(models::moving_wall_disk({}, 0.3)), disk_draw, 20.0});
  return out;
}

void reduction_equivalence() {
  NumericsConfig cfg;
  const double bound = 100.0 * cfg.rel_tol;
  bool ok = true;
  std::string detail;
  std::mt19937_64 rng(cfg.seed + 5);
  for (const auto& cs : reference_cases()) {
    const auto& model = cs.model;
    const auto& cyc = model.cyc;
    const int n = model.cartesian.sys.n;
    double worst_q = 0.0, worst_v = 0.0;
    int runs = 0, mismatched = 0, draws = 0;
    while (runs < 20 && draws < 400) {
      ++draws;
      const TangentState s0 = cs.draw(rng);
      // Horizon: just past the second impact, before the third.
      const auto probe = run_hybrid_flow(model.cartesian, s0, cs.max_horizon, cfg);
      if (probe.termination != Termination::time_horizon_reached || probe.events.size() < 2) continue;
      const double t2 = probe.events[1].tau;
      const double t3 = probe.events.size() > 2 ? probe.events[2].tau : probe.arcs.back().t_end();
      const double horizon = t2 + 0.5 * (t3 - t2);
      ++runs;

      const auto full = run_hybrid_flow(model.cartesian, s0, horizon, cfg);
      const TangentState p0 = model.to_polar(s0);
      const MomentumValue mu0 = momentum_map(model.polar.sys, cyc, p0);
      const TangentState shape0{p0.t, cyc.shape_part(p0.q), cyc.shape_part(p0.v)};
      const Vector theta0 = cyc.cyclic_part(p0.q);
      const auto red = run_reduced_hybrid_flow(model.reduced, mu0, shape0, theta0, horizon, cfg);
      if (red.record.events.size() != full.events.size()) ++mismatched;

      std::vector<double> grid;
      for (int k = 0; k <= 500; ++k) grid.push_back(horizon * k / 500.0);
      const auto rec = reconstruct_at(model.polar.sys, cyc, red, theta0, grid, cfg);
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const TangentState a = on_record(full, grid[k], n);
        const TangentState b = model.to_cartesian(rec[k]);
        for (int j = 0; j < n; ++j) {
          worst_q = std::max(worst_q, std::abs(a.q[j] - b.q[j]) / std::max(1.0, std::abs(a.q[j])));
          worst_v = std::max(worst_v, std::abs(a.v[j] - b.v[j]) / std::max(1.0, std::abs(a.v[j])));
        }
      }
    }
    const bool this_ok = runs == 20 && mismatched == 0 && worst_q <= bound && worst_v <= bound;
    ok = ok && this_ok;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%s: runs=%d  impact-count mismatches=%d  max config dev=%.3g  max velocity dev=%.3g  (bound %.3g)",
                  cs.name.c_str(), runs, mismatched, worst_q, worst_v, bound);
    detail += (detail.empty() ? "" : "\n    ") + std::string(buf);
  }
  verdict(5, "reduction and reconstruction reproduce the full hybrid flow", ok, detail);
}

// --- 6 ---------------------------------------------------------------------------

void field_validation() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> time(0.0, 5.0);
  const std::vector<std::pair<std::string, models::Model>> all{
      {"disk_fixed", models::build_rolling_disk({})},
      {"disk_moving", models::build_rolling_disk(models::moving_wall_disk({}, 0.3))},
      {"billiard c=0.005", models::build_billiard(models::default_billiard(0.005))},
      {"billiard c=0.1", models::build_billiard(models::default_billiard(0.10))},
      {"bouncing_particle", models::build_bouncing_particle({})}};
  bool ok = true;
  std::string detail;
  for (const auto& [label, model] : all) {
    double worst = 0.0;
    for (const HybridSystem* hs : {&model.cartesian, &model.polar}) {
      const int n = hs->sys.n;
      for (int i = 0; i < 200; ++i) {
        Vector q = oracle::random_vector(n, rng, 2.0);
        if (hs == &model.polar && model.has_symmetry) q[0] = 0.3 + std::abs(q[0]);
        const TangentState s{time(rng), q, oracle::random_vector(n, rng, 3.0)};
        worst = std::max(worst, oracle::relative_error(forced_el_field(hs->sys, s).dv_or_dp,
                                                       oracle::el_acceleration(hs->sys, s)));
      }
    }
    ok = ok && worst <= 1e-6;
    detail += (detail.empty() ? "" : "\n    ") + label + ": max relative error " + fmt("%.3g", worst) +
              " over 200 states per chart";
  }
  verdict(6, "analytic fields agree with finite differences of (L, F)", ok, detail);
}

// --- 7 ---------------------------------------------------------------------------

void symmetry_checks() {
  const auto d = models::build_rolling_disk({});
  std::mt19937_64 rng(7);
  std::vector<TangentState> samples;
  for (int i = 0; i < 50; ++i)
    samples.push_back({0.0, oracle::random_vector(3, rng, 2.0), oracle::random_vector(3, rng, 2.0)});
  double residual = 0.0, drift = 0.0;
  for (const auto& X : d.generators) {
    const auto rep = check_symmetry(d.cartesian.sys, X, samples);
    residual = std::max(residual, rep.max_residual);
    drift = std::max(drift, rep.max_drift);
  }

  MechanicalSystem lin;
  lin.n = 1;
  lin.mass = [](double, const Vector&) { return Matrix(Matrix::Identity(1, 1)); };
  lin.potential = [](double, const Vector& q) { return q[0]; };
  const std::vector<TangentState> ls{{0.0, V({0.3}), V({1.5})}, {0.0, V({-2.0}), V({0.0})}};
  const auto rep = check_symmetry(lin, [](const Vector&) { return V({1.0}); }, ls);
  double counter = 0.0;
  for (double r : rep.residuals) counter = std::max(counter, std::abs(std::abs(r) - 1.0));

  const bool ok = residual <= 1e-8 && drift <= 1e-7 && counter <= 1e-9 && !rep.is_symmetry;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "disk generators: max residual=%.3g  max drift=%.3g;  V=x: max ||residual|-1|=%.3g, flagged=%s",
                residual, drift, counter, rep.is_symmetry ? "no" : "yes");
  verdict(7, "symmetry checks", ok, buf);
}

// --- 8 ---------------------------------------------------------------------------

void zeno_handling() {
  const cli::Scenario sc = config("plastic_wall.cfg", "zeno");
  const auto t0 = Clock::now();
  const auto out = cli::run_scenario(sc);
  const double runtime = seconds_since(t0);
  bool files = !out.files.empty();
  for (const auto& f : out.files) files = files && fs::exists(f);
  const bool ok = out.exit_code == cli::kZeno && out.value("full.termination") == "zeno_detected" && files &&
                  runtime < 1.0;
  char buf[256];
  std::snprintf(buf, sizeof buf, "termination=%s  exit=%d  files=%zu  runtime=%.4fs",
                out.value("full.termination").c_str(), out.exit_code, out.files.size(), runtime);
  verdict(8, "Zeno handling", ok, buf);
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria{billiard_reproduction, disk_generalized_momentum, newtonian_laws,
                                         legendre_conjugacy,    reduction_equivalence,     field_validation,
                                         symmetry_checks,       zeno_handling};
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      verdict(static_cast<int>(i + 1), "raised an exception", false, e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
