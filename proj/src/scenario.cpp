#include "hymech/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "hymech/export.hpp"

namespace hymech::cli {

const char* to_string(Mode m) {
  switch (m) {
    case Mode::full:
      return "full";
    case Mode::reduced:
      return "reduced";
    case Mode::both:
      return "both";
    case Mode::classify:
      return "classify";
    case Mode::symcheck:
      return "symcheck";
  }
  return "unknown";
}

Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::full, Mode::reduced, Mode::both, Mode::classify, Mode::symcheck})
    if (s == to_string(m)) return m;
  throw ValidationError("mode: unknown mode '" + std::string(s) +
                        "' (expected full, reduced, both, classify or symcheck)");
}

ParseError::ParseError(const std::string& source, int line_no, const std::string& what)
    : ValidationError(source + ":" + std::to_string(line_no) + ": " + what), line(line_no) {}

// --- registry ---------------------------------------------------------------------

std::vector<std::string> registered_models() {
  return {"disk_fixed", "disk_moving", "billiard", "bouncing_particle"};
}

std::map<std::string, double> registered_parameters(const std::string& model) {
  const models::DiskParams d;
  if (model == "disk_fixed")
    return {{"m", d.m}, {"R", d.R}, {"k", d.k}, {"c", d.c}, {"e", d.e}, {"alpha", d.alpha},
            {"strict_rolling", 0.0}, {"rolling_band", d.rolling_band}};
  if (model == "disk_moving")
    return {{"m", d.m}, {"R", d.R}, {"k", d.k}, {"c", d.c}, {"alpha", d.alpha},
            {"wall_amplitude", 0.25 * d.R}, {"wall_omega", 1.0},
            {"strict_rolling", 0.0}, {"rolling_band", d.rolling_band}};
  if (model == "billiard") return {{"m", 1.0}, {"c", 0.005}, {"f_a", 2.0}, {"f_b", 1.0}, {"f_tau", 10.0}};
  if (model == "bouncing_particle") {
    const models::ParticleParams p;
    return {{"m", p.m}, {"g", p.g}, {"wall", p.wall}, {"e", p.e}};
  }
  std::string names;
  for (const auto& n : registered_models()) names += (names.empty() ? "" : ", ") + n;
  throw ValidationError("model.name: unknown model '" + model + "' (registered: " + names + ")");
}

// --- parsing ------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_number(const std::string& s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::optional<Vector> parse_vector(const std::string& s) {
  std::string norm = s;
  std::replace(norm.begin(), norm.end(), ',', ' ');
  std::istringstream in(norm);
  std::vector<double> xs;
  std::string tok;
  while (in >> tok) {
    double x;
    if (!parse_number(tok, x)) return std::nullopt;
    xs.push_back(x);
  }
  if (xs.empty()) return std::nullopt;
  return Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

double number_or_throw(const std::string& source, int line, const std::string& key, const std::string& value) {
  double x;
  if (!parse_number(value, x)) throw ParseError(source, line, key + ": expected a finite number, got '" + value + "'");
  return x;
}

}  // namespace

Scenario parse_scenario(std::string_view text, const std::string& source) {
  Scenario sc;
  std::map<std::string, std::pair<int, std::string>> model_params;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw ParseError(source, line, "empty key");
    if (value.empty()) throw ParseError(source, line, key + ": empty value");
    if (!seen.insert(key).second) throw ParseError(source, line, key + ": duplicate key");

    auto num = [&] { return number_or_throw(source, line, key, value); };
    auto vecv = [&] {
      auto v = parse_vector(value);
      if (!v) throw ParseError(source, line, key + ": expected a list of finite numbers");
      return *v;
    };
    auto integer = [&](double lo) {
      const double x = num();
      if (x != std::floor(x) || x < lo || x > 9.0e15)
        throw ParseError(source, line, key + ": expected an integer");
      return x;
    };

    if (key == "model.name") {
      sc.model = value;
    } else if (key.rfind("model.", 0) == 0) {
      model_params[key.substr(6)] = {line, value};
    } else if (key == "init.t") {
      sc.t0 = num();
    } else if (key == "init.q") {
      sc.q = vecv();
    } else if (key == "init.v") {
      sc.v = vecv();
    } else if (key == "init.polar.q") {
      sc.polar_q = vecv();
    } else if (key == "init.polar.v") {
      sc.polar_v = vecv();
    } else if (key == "t_end") {
      sc.t_end = num();
    } else if (key == "mode") {
      try {
        sc.mode = parse_mode(value);
      } catch (const ValidationError& e) {
        throw ParseError(source, line, e.what());
      }
    } else if (key == "output.prefix") {
      sc.prefix = value;
    } else if (key == "output.samples") {
      sc.samples = static_cast<int>(integer(2));
    } else if (key == "seed") {
      sc.numerics.seed = static_cast<std::uint64_t>(integer(0));
    } else if (key == "numerics.rel_tol") {
      sc.numerics.rel_tol = num();
    } else if (key == "numerics.abs_tol") {
      sc.numerics.abs_tol = num();
    } else if (key == "numerics.event_tol") {
      sc.numerics.event_tol = num();
    } else if (key == "numerics.zeno_gap") {
      sc.numerics.zeno_gap = num();
    } else if (key == "numerics.max_impacts") {
      sc.numerics.max_impacts = static_cast<std::int64_t>(integer(1));
    } else if (key == "numerics.fd_step") {
      sc.numerics.fd_step = num();
    } else if (key == "numerics.max_bisections") {
      sc.numerics.max_bisections = static_cast<int>(integer(1));
    } else if (key == "numerics.cond_cap") {
      sc.numerics.cond_cap = num();
    } else if (key == "numerics.max_step") {
      sc.numerics.max_step = num();
    } else {
      throw ParseError(source, line, "unknown key '" + key + "'");
    }
  }

  if (sc.model.empty()) throw ValidationError("model.name: missing");
  const auto allowed = registered_parameters(sc.model);
  for (const auto& [name, where] : model_params) {
    if (!allowed.count(name))
      throw ParseError(source, where.first, "model." + name + ": not a parameter of " + sc.model);
    sc.params[name] = number_or_throw(source, where.first, "model." + name, where.second);
  }
  sc.validate();
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.string());
}

void Scenario::validate() const {
  const auto allowed = registered_parameters(model);
  for (const auto& [name, value] : params) {
    if (!allowed.count(name)) throw ValidationError("model." + name + ": not a parameter of " + model);
    if (!std::isfinite(value)) throw ValidationError("model." + name + ": not finite");
  }
  if (!t_end) throw ValidationError("t_end: missing");
  if (!(*t_end > t0)) throw ValidationError("t_end: must be greater than the initial time");
  if (samples < 2) throw ValidationError("output.samples: must be at least 2");
  if (prefix.empty()) throw ValidationError("output.prefix: empty");
  const bool cart = q || v;
  const bool polar = polar_q || polar_v;
  if (cart && polar) throw ValidationError("init: give either init.q/init.v or init.polar.q/init.polar.v");
  if (!cart && !polar) throw ValidationError("init: initial state missing");
  if (cart && !(q && v)) throw ValidationError("init: init.q and init.v must be given together");
  if (polar && !(polar_q && polar_v))
    throw ValidationError("init: init.polar.q and init.polar.v must be given together");
  try {
    numerics.validate();
  } catch (const std::exception& e) {
    throw ValidationError(std::string("numerics: ") + e.what());
  }
}

// --- building ------------------------------------------------------------------------

models::Model build_model(const Scenario& sc) {
  auto param = [&](const std::string& name) {
    auto it = sc.params.find(name);
    return it != sc.params.end() ? it->second : registered_parameters(sc.model).at(name);
  };
  auto has = [&](const std::string& name) { return sc.params.count(name) > 0; };
  const double horizon = sc.t_end.value_or(sc.t0);

  if (sc.model == "disk_fixed" || sc.model == "disk_moving") {
    models::DiskParams p;
    p.m = param("m");
    p.R = param("R");
    p.k = has("k") ? param("k") : p.R / std::numbers::sqrt2;
    p.c = param("c");
    p.alpha = param("alpha");
    p.strict_rolling = param("strict_rolling") != 0.0;
    p.rolling_band = param("rolling_band");
    p.probe_horizon = std::max(horizon, 1.0);
    if (sc.model == "disk_fixed") {
      p.e = param("e");
    } else {
      const double amplitude = has("wall_amplitude") ? param("wall_amplitude") : 0.25 * p.R;
      p = models::moving_wall_disk(p, amplitude, param("wall_omega"));
    }
    return models::build_rolling_disk(p);
  }
  if (sc.model == "billiard") {
    models::BilliardParams p;
    p.m = param("m");
    p.c = param("c");
    const double a = param("f_a"), b = param("f_b"), tau = param("f_tau");
    if (!(tau != 0.0)) throw ValidationError("model.f_tau: must be non-zero");
    p.f = [a, b, tau](double t) { return a - b * std::exp(t / tau); };
    p.fdot = [b, tau](double t) { return -b / tau * std::exp(t / tau); };
    p.probe_horizon = std::max(horizon, 1.0);
    return models::build_billiard(p);
  }
  models::ParticleParams p;
  p.m = param("m");
  p.g = param("g");
  p.wall = param("wall");
  p.e = param("e");
  return models::build_bouncing_particle(p);
}

TangentState initial_state(const Scenario& sc, const models::Model& model) {
  const int n = model.cartesian.sys.n;
  TangentState s;
  if (sc.q) {
    s = {sc.t0, *sc.q, *sc.v};
  } else {
    const int np = model.polar.sys.n;
    if (sc.polar_q->size() != np || sc.polar_v->size() != np)
      throw ValidationError("init.polar: expected " + std::to_string(np) + " components");
    try {
      s = model.to_cartesian({sc.t0, *sc.polar_q, *sc.polar_v});
    } catch (const ChartError& e) {
      throw ValidationError(std::string("init.polar: ") + e.what());
    }
  }
  if (s.q.size() != n || s.v.size() != n)
    throw ValidationError("init: expected " + std::to_string(n) + " components for " + model.name);
  s.validate();
  return s;
}

// --- running -------------------------------------------------------------------------

std::string RunOutcome::value(const std::string& key) const {
  for (const auto& [k, v] : report)
    if (k == key) return v;
  return {};
}

namespace {

using io::format_double;

class Runner {
 public:
  Runner(const Scenario& sc, models::Model model)
      : sc_(sc), model_(std::move(model)), cfg_(sc.numerics), t_end_(*sc.t_end) {}

  RunOutcome run() {
    const TangentState s0 = initial_state(sc_, model_);
    if (sc_.mode != Mode::full && !model_.has_symmetry)
      throw ValidationError("mode " + std::string(to_string(sc_.mode)) + ": model " + model_.name +
                            " declares no symmetry");
    report("model", model_.name);
    report("mode", to_string(sc_.mode));
    report("t0", format_double(sc_.t0));
    report("t_end", format_double(t_end_));
    report("seed", std::to_string(cfg_.seed));
    if (sc_.model == "billiard") {
      auto param = [&](const std::string& k) {
        auto it = sc_.params.find(k);
        return it != sc_.params.end() ? it->second : registered_parameters(sc_.model).at(k);
      };
      // f = a - b exp(t / tau) is non-decreasing exactly when b / tau <= 0.
      report("model.wall_increasing", param("f_b") / param("f_tau") <= 0.0 ? "yes" : "no");
    }

    switch (sc_.mode) {
      case Mode::full:
        run_full(s0);
        break;
      case Mode::reduced:
        run_reduced(s0);
        break;
      case Mode::both:
        run_full(s0);
        run_reduced(s0);
        compare();
        break;
      case Mode::classify:
        run_full(s0);
        classify();
        break;
      case Mode::symcheck:
        run_full(s0);
        symcheck();
        break;
    }
    report("exit_code", std::to_string(out_.exit_code));
    write_report();
    return std::move(out_);
  }

 private:
  std::filesystem::path file(const std::string& suffix) const {
    return std::filesystem::path(sc_.prefix + suffix);
  }

  void report(const std::string& key, const std::string& value) { out_.report.emplace_back(key, value); }

  void note_termination(const std::string& which, Termination t, const std::string& message) {
    report(which + ".termination", to_string(t));
    if (!message.empty()) report(which + ".message", message);
    int code = kSuccess;
    if (t == Termination::zeno_detected) code = kZeno;
    if (t == Termination::integration_failure) code = kSimulationFailure;
    if (code == kSimulationFailure || (code == kZeno && out_.exit_code == kSuccess)) out_.exit_code = code;
  }

  void write(const std::string& suffix, const io::Table& t) {
    io::write_table(file(suffix), t);
    out_.files.push_back(file(suffix));
  }
  void write(const std::string& suffix, const io::Series& s) {
    if (s.empty()) return;
    io::write_series(file(suffix), s);
    out_.files.push_back(file(suffix));
  }

  bool planar() const { return model_.has_symmetry; }

  void run_full(const TangentState& s0) {
    full_ = run_hybrid_flow(model_.cartesian, s0, t_end_, cfg_);
    if (model_.has_symmetry) annotate_momentum(*full_, model_.momentum);
    note_termination("full", full_->termination, full_->message);
    report("full.impacts", std::to_string(full_->events.size()));

    const auto& labels = model_.cartesian.sys.coordinate_labels;
    const auto states = io::sample_record(*full_, model_.cartesian.sys.n, sc_.samples);
    write("_full.csv", io::trajectory_table(labels, states));
    write("_events.csv", io::events_table(labels, full_->events));
    io::write_impact_times(file("_impacts.dat"), full_->events);
    out_.files.push_back(file("_impacts.dat"));

    io::Series a, b;
    for (const auto& s : states) {
      if (planar()) {
        a.emplace_back(s.t, std::hypot(s.q[0], s.q[1]));
        b.emplace_back(s.q[0], s.q[1]);
      } else {
        a.emplace_back(s.t, s.q[0]);
      }
    }
    write(planar() ? "_full_tr.dat" : "_full_tq.dat", a);
    write("_full_xy.dat", b);

    if (model_.has_symmetry) {
      io::Table mt;
      mt.header = {"arc", "t_begin", "t_end"};
      const auto mu_dim = model_.generators.size();
      for (std::size_t i = 0; i < mu_dim; ++i) mt.header.push_back("mu_" + std::to_string(i + 1));
      for (std::size_t i = 0; i < mu_dim; ++i) mt.header.push_back("drift_" + std::to_string(i + 1));
      double worst = 0.0;
      for (std::size_t a_i = 0; a_i < full_->arcs.size(); ++a_i) {
        const auto& arc = full_->arcs[a_i];
        const Vector mu0 = model_.momentum(arc.front());
        Vector drift = Vector::Zero(mu0.size());
        for (const auto& s : arc.samples)
          drift = drift.cwiseMax((model_.momentum(s) - mu0).cwiseAbs() / std::max(1.0, mu0.cwiseAbs().maxCoeff()));
        worst = std::max(worst, drift.maxCoeff());
        std::vector<std::string> row{std::to_string(a_i), format_double(arc.t_begin()), format_double(arc.t_end())};
        for (Eigen::Index i = 0; i < mu0.size(); ++i) row.push_back(format_double(mu0[i]));
        for (Eigen::Index i = 0; i < drift.size(); ++i) row.push_back(format_double(drift[i]));
        mt.rows.push_back(std::move(row));
      }
      write("_momentum.csv", mt);
      report("full.max_arc_momentum_drift", format_double(worst));
    }
  }

  void run_reduced(const TangentState& s0) {
    const auto& cyc = model_.cyc;
    const TangentState p0 = model_.to_polar(s0);
    const MomentumValue mu0 = momentum_map(model_.polar.sys, cyc, p0);
    const TangentState shape0{p0.t, cyc.shape_part(p0.q), cyc.shape_part(p0.v)};
    theta0_ = cyc.cyclic_part(p0.q);
    reduced_ = run_reduced_hybrid_flow(model_.reduced, mu0, shape0, theta0_, t_end_, cfg_);
    const HybridFlowRecord& rec = reduced_->record;
    note_termination("reduced", rec.termination, rec.message);
    report("reduced.impacts", std::to_string(rec.events.size()));

    std::vector<std::string> shape_labels;
    for (int i : cyc.shape_indices) shape_labels.push_back(model_.polar.sys.coordinate_labels[i]);
    const auto states = io::sample_record(rec, reduced_->shape_dim, sc_.samples);
    write("_reduced.csv", io::trajectory_table(shape_labels, states));
    write("_reduced_events.csv", io::events_table(shape_labels, rec.events));

    io::Table mt;
    mt.header = {"arc", "t_begin", "t_end"};
    for (int i = 0; i < reduced_->cyclic_dim; ++i) mt.header.push_back("mu_" + std::to_string(i + 1));
    for (std::size_t i = 0; i < rec.arcs.size(); ++i) {
      std::vector<std::string> row{std::to_string(i), format_double(rec.arcs[i].t_begin()),
                                   format_double(rec.arcs[i].t_end())};
      for (Eigen::Index j = 0; j < reduced_->mu_sequence[i].mu.size(); ++j)
        row.push_back(format_double(reduced_->mu_sequence[i].mu[j]));
      mt.rows.push_back(std::move(row));
    }
    write("_reduced_momentum.csv", mt);

    io::Series tr;
    for (const auto& s : states) tr.emplace_back(s.t, s.q[0]);
    write("_reduced_tr.dat", tr);

    // Reconstruction on a uniform grid.
    grid_.clear();
    const double ta = rec.arcs.front().t_begin(), tb = rec.arcs.back().t_end();
    for (int i = 0; i < sc_.samples; ++i) grid_.push_back(ta + (tb - ta) * i / (sc_.samples - 1));
    const auto polar_states = reconstruct_at(model_.polar.sys, cyc, *reduced_, theta0_, grid_, cfg_);
    reconstructed_.clear();
    for (const auto& ps : polar_states) reconstructed_.push_back(model_.to_cartesian(ps));
    write("_reconstructed.csv", io::trajectory_table(model_.cartesian.sys.coordinate_labels, reconstructed_));
    io::Series xy;
    for (const auto& s : reconstructed_) xy.emplace_back(s.q[0], s.q[1]);
    write("_reconstructed_xy.dat", xy);
  }

  static TangentState record_state(const HybridFlowRecord& r, double t, int n) {
    std::size_t i = 0;
    while (i + 1 < r.arcs.size() && r.arcs[i + 1].t_begin() <= t) ++i;
    return state_at(r.arcs[i], t, n);
  }

  void compare() {
    const HybridFlowRecord& red = reduced_->record;
    const double horizon = std::min(full_->arcs.back().t_end(), red.arcs.back().t_end());
    double radius_dev = 0.0, position_dev = 0.0;
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double t = grid_[i];
      if (t > horizon) break;
      const TangentState f = record_state(*full_, t, model_.cartesian.sys.n);
      const TangentState r = record_state(red, t, reduced_->shape_dim);
      radius_dev = std::max(radius_dev, std::abs(std::hypot(f.q[0], f.q[1]) - r.q[0]));
      position_dev = std::max(position_dev, (f.q - reconstructed_[i].q).cwiseAbs().maxCoeff());
    }
    double tau_dev = 0.0;
    const std::size_t common = std::min(full_->events.size(), red.events.size());
    for (std::size_t i = 0; i < common; ++i)
      tau_dev = std::max(tau_dev, std::abs(full_->events[i].tau - red.events[i].tau));
    report("compare.max_radius_deviation", format_double(radius_dev));
    report("compare.max_position_deviation", format_double(position_dev));
    report("compare.max_impact_time_deviation", format_double(tau_dev));
    report("compare.impact_count_match", full_->events.size() == red.events.size() ? "yes" : "no");
  }

  void classify() {
    if (full_->events.empty()) {
      report("classify.verdict", "undetermined (no impacts)");
      return;
    }
    const ClassificationReport rep =
        classify_momentum_map(model_.cartesian, *full_, model_.momentum, model_.sampler, cfg_);
    report("classify.verdict", to_string(rep.verdict));
    report("classify.max_momentum_jump", format_double(rep.max_momentum_jump));
    report("classify.max_level_set_violation", format_double(rep.max_level_set_violation));
    report("classify.probes_per_level", std::to_string(rep.probes_per_level));
    report("classify.isotropy_preserved", rep.isotropy_preserved ? "yes" : "no");
    for (std::size_t i = 0; i < model_.generators.size(); ++i) {
      const auto hc = check_hybrid_constant(
          *full_, [this, i](const TangentState& s) { return model_.momentum(s)[static_cast<Eigen::Index>(i)]; });
      const std::string key = "classify.mu_" + std::to_string(i + 1);
      report(key + ".hybrid_constant", hc.is_hybrid_constant ? "yes" : "no");
      report(key + ".max_drift", format_double(hc.max_drift));
      report(key + ".max_jump", format_double(hc.max_jump));
    }
  }

  void symcheck() {
    const auto all = io::sample_record(*full_, model_.cartesian.sys.n, 25);
    for (std::size_t i = 0; i < model_.generators.size(); ++i) {
      const SymmetryReport rep = check_symmetry(model_.cartesian.sys, model_.generators[i], all, cfg_);
      const std::string key = "symcheck.generator_" + std::to_string(i + 1);
      report(key + ".max_residual", format_double(rep.max_residual));
      report(key + ".max_lift_drift", format_double(rep.max_drift));
      report(key + ".is_symmetry", rep.is_symmetry ? "yes" : "no");
    }
  }

  void write_report() {
    std::ostringstream text;
    for (const auto& [k, v] : out_.report) text << k << ": " << v << '\n';
    const auto path = file("_report.txt");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text.str();
    out_.files.push_back(path);
  }

  const Scenario& sc_;
  models::Model model_;
  NumericsConfig cfg_;
  double t_end_;
  RunOutcome out_;
  std::optional<HybridFlowRecord> full_;
  std::optional<ReducedFlowRecord> reduced_;
  Vector theta0_;
  std::vector<double> grid_;
  std::vector<TangentState> reconstructed_;
};

}  // namespace

RunOutcome run_scenario(const Scenario& sc) {
  sc.validate();
  return Runner(sc, build_model(sc)).run();
}

}  // namespace hymech::cli
