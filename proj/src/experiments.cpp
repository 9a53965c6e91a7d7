#include "perwave/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "perwave/bounds.hpp"
#include "perwave/errors.hpp"
#include "perwave/hill_floquet.hpp"
#include "perwave/instability_lab.hpp"
#include "perwave/io.hpp"
#include "perwave/radial_wave.hpp"

namespace perwave {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- field access

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(where + ": missing field '" + key + "'");
  }
  return j.at(key);
}

double number(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  if (!v.is_number()) throw ConfigError(where + ": field '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return number(j, key, where);
}

int integer_or(const Json& j, const char* key, int fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  if (j.is_object() && j.contains(key) && j.at(key).is_object()) return j.at(key);
  return empty;
}

std::string kind_of(const Json& j, const std::string& where) {
  const Json& v = field(j, "kind", where);
  if (!v.is_string()) throw ConfigError(where + ": 'kind' must be a string");
  return v.get<std::string>();
}

std::string type_of(const Json& j, const std::string& where) {
  const Json& v = field(j, "type", where);
  if (!v.is_string()) throw ConfigError(where + ": 'type' must be a string");
  return v.get<std::string>();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- run context

struct Context {
  RunConfig config;
  fs::path out;
  unsigned threads = 1;
  Json derived = Json::object();
  Json outputs = Json::array();
  Json checks = Json::array();

  void output(const std::string& name, const std::string& contents) {
    write_file_atomic(out / name, contents);
    outputs.push_back(name);
  }

  void check(const std::string& name, bool passed, double value, double limit) {
    checks.push_back({{"name", name}, {"passed", passed}, {"value", value}, {"limit", limit}});
  }

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Json& c) { return c["passed"].get<bool>(); });
  }
};

const RadialGrid& need_grid(const Context& ctx) {
  if (!ctx.config.grid) throw ConfigError("experiment needs a 'grid' section");
  return *ctx.config.grid;
}

double need_period(const Context& ctx) {
  if (!(ctx.config.T > 0.0)) throw ConfigError("experiment needs time.T > 0");
  return ctx.config.T;
}

// dt shrunk so that one period is a whole number of steps
double period_dt(Context& ctx) {
  const double T = need_period(ctx);
  check_cfl(need_grid(ctx), ctx.config.dt);
  const double dt = T / step_count(T, ctx.config.dt);
  ctx.derived["dt_effective"] = dt;
  return dt;
}

std::optional<BarrierSpec> barrier_of(const Context& ctx) {
  if (kind_of(ctx.config.potential, "potential") != "barrier") return std::nullopt;
  return parse_barrier(ctx.config.potential);
}

std::optional<UnstableMode> hill_mode(Context& ctx) {
  const auto barrier = barrier_of(ctx);
  if (!barrier) return std::nullopt;
  const int k_max = integer_or(section(ctx.config.raw, "hill"), "k_max", 8, "hill");
  auto mode = pick_unstable_mode(*barrier, k_max);
  if (mode) {
    ctx.derived["hill_mode"] = {{"k", mode->k},
                                {"omega_sq", mode->omega_sq},
                                {"trace", mode->multipliers.trace},
                                {"z1", mode->multipliers.mu1.real()},
                                {"abs_z1", mode->multipliers.max_abs()}};
  } else {
    ctx.derived["hill_mode"] = nullptr;
  }
  return mode;
}

double norm1(const State& s) { return energy_norms(s).norm1(); }

FloquetResult power_iteration(Context& ctx, const Potential& q, double dt) {
  const Json& p = section(ctx.config.raw, "power");
  PowerIterationOptions o;
  o.max_iter = integer_or(p, "max_iter", 200, "power");
  o.tol = number_or(p, "tol", 1e-8, "power");
  o.seed = ctx.config.seed;
  const auto f = dominant_eigenvalue(q, ctx.config.T, dt, need_grid(ctx), o);
  ctx.derived["rho"] = f.magnitude;
  ctx.derived["eigenvalue"] = {f.eigenvalue.real(), f.eigenvalue.imag()};
  ctx.derived["power_residual"] = f.residual;
  ctx.derived["power_iterations"] = f.iterations;
  ctx.derived["power_converged"] = f.converged;
  return f;
}

// Initial data from the "data" section: random smooth bumps, the embedded unstable Hill
// mode of a barrier, or the dominant eigenstate; scaled to ||.||_1 = amplitude.
State initial_data(Context& ctx, const Potential& q, double dt) {
  const Json& d = section(ctx.config.raw, "data");
  const std::string kind = d.contains("kind") ? d.at("kind").get<std::string>() : "random";
  const RadialGrid& grid = need_grid(ctx);
  State s(grid);
  if (kind == "random") {
    const double radius = number_or(d, "radius", std::max(1.0, q.support_radius()), "data");
    s = random_smooth_state(grid, radius, ctx.config.seed, integer_or(d, "bumps", 6, "data"));
  } else if (kind == "mode") {
    const auto mode = hill_mode(ctx);
    if (!mode) throw ConfigError("data.kind = mode needs a barrier potential with an unstable mode");
    const double L = parse_barrier(ctx.config.potential).inner_radius;
    for (int i = 0; i + 1 < grid.n && grid.r(i) < L; ++i) {
      const double m = std::sin(mode->k * std::numbers::pi * grid.r(i) / L);
      s.v[static_cast<std::size_t>(i)] = mode->floquet_vector[0] * m;
      s.w[static_cast<std::size_t>(i)] = mode->floquet_vector[1] * m;
    }
  } else if (kind == "eigenstate") {
    s = power_iteration(ctx, q, dt).eigenstate;
  } else {
    throw ConfigError("data.kind must be random, mode or eigenstate");
  }
  const double amplitude = number_or(d, "amplitude", 1.0, "data");
  const double n = norm1(s);
  if (!(n > 0.0)) throw ConfigError("initial data vanish");
  return (amplitude / n) * s;
}

// ---------------------------------------------------------------- experiments

void run_hill_scan(Context& ctx) {
  const Json& h = section(ctx.config.raw, "hill");
  std::function<double(double)> forcing;
  double period = 0.0;
  double shift = 0.0;
  if (h.contains("mathieu_p")) {
    const double p = number(h, "mathieu_p", "hill");
    const HillProblem m = mathieu_problem(0.0, p);
    forcing = m.forcing;
    period = m.period;
    shift = -2.0 * p;  // omega_sq = a - 2p
  } else {
    TimeProfile profile = TimeProfile::constant(0.0);
    double scale = 1.0;
    if (h.contains("forcing")) {
      period = number_or(h, "period", ctx.config.T, "hill");
      profile = parse_time_profile(h.at("forcing"), period);
    } else {
      const std::string kind = kind_of(ctx.config.potential, "potential");
      if (kind == "barrier") {
        const auto b = parse_barrier(ctx.config.potential);
        profile = b.hill_profile;
        period = b.period;
      } else if (kind == "separable") {
        const Potential q = parse_potential(ctx.config.potential);
        profile = q.terms().front().time;
        scale = q.terms().front().space.max_value();
        period = q.period();
      } else {
        throw ConfigError("hill-scan needs hill.forcing, hill.mathieu_p, or a barrier/separable potential");
      }
    }
    forcing = [profile, scale](double t) { return scale * profile.value(t); };
  }
  if (!(period > 0.0)) throw ConfigError("hill-scan needs a positive forcing period");
  const Json& range = field(h, h.contains("a_range") ? "a_range" : "omega_sq_range", "hill");
  if (!range.is_array() || range.size() != 2) throw ConfigError("hill: range must be [lo, hi]");
  const double lo = range[0].get<double>() + shift;
  const double hi = range[1].get<double>() + shift;
  const int n = integer_or(h, "n", 101, "hill");
  const int steps = integer_or(h, "steps", 2000, "hill");

  const auto scan = tongue_scan(forcing, period, {lo, hi}, n, steps, ctx.threads);
  CsvTable csv({"omega_sq", "trace", "max_multiplier", "unstable"});
  double worst_det = 0.0;
  for (const auto& p : scan) {
    csv.add_row({p.omega_sq, p.trace, p.max_multiplier, p.unstable ? 1.0 : 0.0});
    worst_det = std::max(worst_det, p.det_defect);
  }
  ctx.output("tongue_scan.csv", csv.str());
  Json intervals = Json::array();
  for (const auto& [a, b] : instability_intervals(scan)) intervals.push_back({a, b});
  ctx.derived["tongue_intervals"] = intervals;
  ctx.check("liouville_det_defect", worst_det <= 1e-9, worst_det, 1e-9);
  if (!h.contains("mathieu_p") && !h.contains("forcing")) hill_mode(ctx);
}

void run_floquet_eig(Context& ctx) {
  const Potential q = parse_potential(ctx.config.potential);
  const double dt = period_dt(ctx);
  const auto f = power_iteration(ctx, q, dt);
  Json out = {{"magnitude", f.magnitude},
              {"eigenvalue", {f.eigenvalue.real(), f.eigenvalue.imag()}},
              {"residual", f.residual},
              {"iterations", f.iterations},
              {"converged", f.converged},
              {"complex_pair", f.complex_pair}};
  ctx.output("floquet.json", out.dump(2) + "\n");
  write_snapshot(ctx.out / "eigenstate.bin", f.eigenstate, 0.0);
  ctx.outputs.push_back("eigenstate.bin");
  ctx.check("power_iteration_converged", f.converged, f.residual,
            number_or(section(ctx.config.raw, "power"), "tol", 1e-8, "power"));
  if (const auto mode = hill_mode(ctx)) {
    const double gap = std::abs(f.magnitude - mode->multipliers.max_abs()) / mode->multipliers.max_abs();
    ctx.derived["relative_gap_to_hill"] = gap;
    ctx.check("eigenvalue_vs_hill_multiplier", gap <= 0.10, gap, 0.10);
  }
}

void run_linear_growth(Context& ctx) {
  const Potential q = parse_potential(ctx.config.potential);
  const double dt = period_dt(ctx);
  const double T = ctx.config.T;
  const int periods = static_cast<int>(std::floor(ctx.config.horizon / T + 1e-9));
  if (periods < 4) throw ConfigError("linear-growth needs a horizon of at least 4 periods");
  const State data = initial_data(ctx, q, dt);
  const LinearPropagator propagator(q, data.grid);

  CsvTable csv({"t", "norm0", "norm1"});
  State s = data;
  std::vector<double> logs;
  double offset = 0.0;
  for (int p = 0; p <= periods; ++p) {
    if (p > 0) s = propagator.propagate(s, (p - 1) * T, p * T, dt);
    const auto e = energy_norms(s);
    if (!std::isfinite(e.norm1())) throw IntegrationError("linear run overflowed");
    csv.add_row({p * T, std::exp(offset) * e.norm0(), std::exp(offset) * e.norm1()});
    logs.push_back(offset + std::log(e.norm1()));
    // renormalize so long unstable runs stay in range
    offset += std::log(e.norm1());
    s = (1.0 / e.norm1()) * s;
  }
  ctx.output("trajectory.csv", csv.str());
  if (section(ctx.config.raw, "data").value("snapshot", false)) {
    write_snapshot(ctx.out / "final_state.bin", std::exp(offset) * s, periods * T);
    ctx.outputs.push_back("final_state.bin");
  }
  std::vector<double> xs, ys;
  for (int p = (periods + 1) / 2; p <= periods; ++p) {
    xs.push_back(p * T);
    ys.push_back(logs[static_cast<std::size_t>(p)]);
  }
  const double rate = ls_slope(xs, ys);
  ctx.derived["growth_rate"] = rate;
  if (const auto mode = hill_mode(ctx)) {
    const double target = std::log(mode->multipliers.max_abs()) / T;
    const double rel = std::abs(rate - target) / target;
    ctx.derived["hill_rate"] = target;
    ctx.check("growth_rate_vs_hill", rel <= 0.05, rel, 0.05);
  } else if (q.is_static()) {
    ctx.check("no_growth_static_potential", rate <= 1e-3, rate, 1e-3);
  }
}

void write_energy_csv(Context& ctx, const Trajectory& tr, double C2, double r) {
  CsvTable csv({"t", "kinetic", "gradient", "potential_term", "nonlinear_term", "X", "rhs_identity",
                "envelope_value", "violated"});
  const double t0 = tr.reports.front().t;
  const double X0 = tr.reports.front().X;
  for (const auto& e : tr.reports) {
    const double env = theorem2_envelope(X0, C2, r, e.t - t0).X_env;
    csv.add_row({e.t, e.kinetic, e.gradient, e.potential_term, e.nonlinear_term, e.X, e.rhs_identity,
                 env, e.X > env * (1.0 + 1e-12) ? 1.0 : 0.0});
  }
  ctx.output("energy.csv", csv.str());
  CsvTable traj({"t", "norm0", "norm1"});
  for (std::size_t k = 0; k < tr.reports.size(); ++k) {
    traj.add_row({tr.reports[k].t, tr.norms[k].norm0(), tr.norms[k].norm1()});
  }
  ctx.output("trajectory.csv", traj.str());
}

bool components_nonnegative(const Trajectory& tr) {
  for (const auto& e : tr.reports) {
    if (e.kinetic < 0.0 || e.gradient < 0.0 || e.potential_term < 0.0 || e.nonlinear_term < 0.0) return false;
    for (double m : e.multi_terms) {
      if (m < 0.0) return false;
    }
  }
  return true;
}

double relative_drift(const Trajectory& tr) {
  const double X0 = tr.reports.front().X;
  double worst = 0.0;
  for (const auto& e : tr.reports) worst = std::max(worst, std::abs(e.X - X0));
  return X0 > 0.0 ? worst / X0 : worst;
}

EvolveOptions evolve_options(const Context& ctx, double dt) {
  EvolveOptions o;
  const int per_period = ctx.config.T > 0.0 ? step_count(ctx.config.T, dt) : 1;
  o.report_every = integer_or(ctx.config.raw, "report_every", std::max(1, per_period / 8), "config");
  return o;
}

void abort_run(Context& ctx, const Trajectory& tr) {
  ctx.derived["abort_time"] = tr.t_last;
  throw IntegrationError(tr.diagnostic);
}

void run_nonlinear(Context& ctx) {
  const Potential q = parse_potential(ctx.config.potential);
  const NonlinearitySpec nl = parse_nonlinearity(ctx.config.nonlinearity);
  const double dt = period_dt(ctx);
  const State data = initial_data(ctx, q, dt);
  const auto tr = evolve(data, q, nl, 0.0, ctx.config.horizon, dt, evolve_options(ctx, dt));
  if (tr.aborted) abort_run(ctx, tr);
  const double C2 = nl.enabled ? energy_rate_constant(q, nl, data.grid) : 0.0;
  write_energy_csv(ctx, tr, C2, nl.r);
  ctx.derived["C2"] = C2;
  ctx.derived["C2_fitted"] = fitted_rate_constant(tr.reports, nl.r);
  ctx.derived["identity_defect"] = identity_defect(tr.reports);
  ctx.derived["refined_steps"] = tr.refined_steps;
  ctx.derived["X0"] = tr.reports.front().X;
  ctx.derived["X_final"] = tr.reports.back().X;
  ctx.check("energy_components_nonnegative", components_nonnegative(tr), 0.0, 0.0);
  if (nl.enabled) {
    const auto env = check_envelopes(tr, C2, nl.r);
    ctx.check("energy_envelopes", env.violations == 0, env.violations, 0.0);
    ctx.derived["worst_envelope_ratio"] = {env.worst_X_ratio, env.worst_norm_ratio, env.worst_l2_ratio};
  }
  if (q.is_static()) {
    const double drift = relative_drift(tr);
    ctx.check("static_conservation", drift <= 1e-6, drift, 1e-6);
  }
}

void run_instability(Context& ctx) {
  const Potential q = parse_potential(ctx.config.potential);
  const NonlinearitySpec nl = parse_nonlinearity(ctx.config.nonlinearity);
  const double dt = period_dt(ctx);
  const auto f = power_iteration(ctx, q, dt);
  const Json& s = section(ctx.config.raw, "instability");
  std::vector<double> deltas{1e-3, 1e-4, 1e-5};
  if (s.contains("deltas")) deltas = s.at("deltas").get<std::vector<double>>();
  const double eta = s.contains("eta") && !s.at("eta").is_null() ? number(s, "eta", "instability")
                                                                   : default_eta(f.eigenstate, q, nl);
  CertificateOptions o;
  o.max_n = integer_or(s, "max_n", 100, "instability");
  o.growth_constant = number_or(s, "growth_constant", 0.5, "instability");
  o.threads = ctx.threads;
  const auto runs = instability_certificate(q, nl, ctx.config.T, dt, f, deltas, eta, o);
  ctx.derived["eta"] = eta;
  Json out = Json::array();
  bool all_certified = true;
  double worst_rel = 0.0;
  for (const auto& run : runs) {
    Json j = {{"delta", run.delta},
              {"eta", run.eta},
              {"rho", run.rho},
              {"escaped_at", run.escaped_at ? Json(*run.escaped_at) : Json(nullptr)},
              {"escape_time", run.escape_time ? Json(*run.escape_time) : Json(nullptr)},
              {"iterates", run.iterates},
              {"certificate", run.certificate}};
    if (!run.diagnostic.empty()) j["diagnostic"] = run.diagnostic;
    out.push_back(j);
    all_certified = all_certified && run.certificate;
    if (run.escaped_at && run.rho > 1.0) {
      const double predicted = std::log(run.eta / run.delta) / std::log(run.rho);
      worst_rel = std::max(worst_rel, std::abs(*run.escaped_at - predicted) / predicted);
    }
  }
  ctx.output("certificate.json", out.dump(2) + "\n");
  ctx.check("certificates", all_certified, all_certified ? 1.0 : 0.0, 1.0);
  ctx.check("escape_vs_prediction", all_certified && worst_rel <= 0.2, worst_rel, 0.2);
}

void run_bound_check(Context& ctx) {
  const Json& b = section(ctx.config.raw, "bounds");
  std::vector<double> gammas{0.1, 0.25, 0.5, 0.9};
  if (b.contains("gammas")) gammas = b.at("gammas").get<std::vector<double>>();
  const int trials = integer_or(b, "trials", 1000, "bounds");
  const int draws = integer_or(b, "parameter_draws", 10, "bounds");
  const double horizon = number_or(b, "horizon", 3.0, "bounds");
  const double c_max = number_or(b, "C_max", 2.0, "bounds");
  const double x_max = number_or(b, "X0_max", 2.0, "bounds");
  const int per_draw = std::max(1, trials / static_cast<int>(gammas.size() * draws));

  std::mt19937_64 rng(ctx.config.seed);
  CsvTable csv({"gamma", "C", "X0", "worst_margin"});
  double worst = 0.0;
  for (double g : gammas) {
    for (int d = 0; d < draws; ++d) {
      OdeBoundParams p{g, c_max * uniform01(rng), d == 0 ? 0.0 : x_max * uniform01(rng)};
      FalsifyOptions o;
      o.seed = rng();
      o.threads = ctx.threads;
      const auto r = lemma3_falsify(p, per_draw, horizon, o);
      csv.add_row({p.gamma, p.C, p.X0, r.worst_margin});
      worst = std::min(worst, r.worst_margin);
    }
  }
  ctx.output("bound_check.csv", csv.str());
  ctx.check("lemma_margin", worst >= -1e-8, worst, -1e-8);

  double extremal = 0.0;
  for (double g : gammas) {
    FalsifyOptions o;
    o.mode = DriveMode::Plus;
    const auto r = lemma3_falsify({g, 2.0, 1.0}, 1, 3.0, o);
    extremal = std::max(extremal, std::abs(r.worst_margin));
  }
  ctx.derived["extremal_gap"] = extremal;
  ctx.check("extremal_saturation", extremal <= 1e-6, extremal, 1e-6);
}

void run_multi(Context& ctx) {
  const Potential q = parse_potential(ctx.config.potential);
  const NonlinearitySpec nl = parse_nonlinearity(ctx.config.nonlinearity);
  if (!nl.multi) throw ConfigError("multi-run needs nonlinearity.multi");
  const double dt = period_dt(ctx);
  const State data = initial_data(ctx, q, dt);
  const auto tr = evolve(data, q, nl, 0.0, ctx.config.horizon, dt, evolve_options(ctx, dt));
  if (tr.aborted) abort_run(ctx, tr);
  const double B = multi_rate_constant(q, *nl.multi, data.grid);
  ctx.derived["B_r"] = B;

  std::vector<std::string> header{"t", "kinetic", "gradient", "potential_term", "nonlinear_term"};
  for (const auto& term : nl.multi->terms) header.push_back("multi_" + std::to_string(term.exponent));
  for (const char* c : {"X", "rhs_identity", "Y", "Y_bound", "violated"}) header.emplace_back(c);
  CsvTable csv(header);
  const double Y0 = 1.0 + tr.reports.front().X;
  int violations = 0;
  for (const auto& e : tr.reports) {
    const double Y = 1.0 + e.X;
    const double bound = multi_term_bound(Y0, B, nl.r, e.t);
    const bool bad = Y > bound * (1.0 + 1e-12);
    violations += bad;
    std::vector<double> row{e.t, e.kinetic, e.gradient, e.potential_term, e.nonlinear_term};
    row.insert(row.end(), e.multi_terms.begin(), e.multi_terms.end());
    row.insert(row.end(), {e.X, e.rhs_identity, Y, bound, bad ? 1.0 : 0.0});
    csv.add_row(row);
  }
  ctx.output("energy_multi.csv", csv.str());
  ctx.check("energy_components_nonnegative", components_nonnegative(tr), 0.0, 0.0);
  ctx.check("multi_term_bound", violations == 0, violations, 0.0);
  bool all_static = q.is_static();
  for (const auto& term : nl.multi->terms) all_static = all_static && term.potential.is_static();
  if (all_static) {
    const double drift = relative_drift(tr);
    ctx.check("static_conservation", drift <= 1e-6, drift, 1e-6);
  }
}

using Experiment = void (*)(Context&);

const std::map<std::string, Experiment>& registry() {
  static const std::map<std::string, Experiment> r{
      {"hill-scan", run_hill_scan},       {"floquet-eig", run_floquet_eig},
      {"linear-growth", run_linear_growth}, {"nonlinear-run", run_nonlinear},
      {"instability", run_instability},   {"bound-check", run_bound_check},
      {"multi-run", run_multi}};
  return r;
}

}  // namespace

// ---------------------------------------------------------------- parsers

TimeProfile parse_time_profile(const Json& j, double period) {
  const std::string where = "time_profile";
  const std::string type = type_of(j, where);
  if (type == "constant") return TimeProfile::constant(number(j, "value", where));
  if (type == "harmonic") {
    return TimeProfile::harmonic(period, number(j, "mean", where), number(j, "amplitude", where),
                                 integer_or(j, "harmonic", 1, where), number_or(j, "phase", 0.0, where));
  }
  if (type == "sampled") {
    const Json& s = field(j, "samples", where);
    if (!s.is_array()) throw ConfigError(where + ": 'samples' must be an array");
    return TimeProfile::sampled(period, s.get<std::vector<double>>());
  }
  throw ConfigError(where + ": unknown type '" + type + "'");
}

SpaceProfile parse_space_profile(const Json& j) {
  const std::string where = "space_profile";
  const std::string type = type_of(j, where);
  if (type == "zero") return SpaceProfile::zero();
  if (type == "bump") return SpaceProfile::bump(number(j, "height", where), number(j, "radius", where));
  if (type == "plateau") {
    return SpaceProfile::plateau(number(j, "height", where), number(j, "radius", where),
                                 number(j, "ramp", where));
  }
  if (type == "shell") {
    return SpaceProfile::shell(number(j, "height", where), number(j, "inner", where),
                               number(j, "outer", where), number(j, "ramp", where));
  }
  throw ConfigError(where + ": unknown type '" + type + "'");
}

BarrierSpec parse_barrier(const Json& j) {
  const std::string where = "potential";
  BarrierSpec b;
  b.period = number(j, "period", where);
  b.inner_radius = number(j, "inner_radius", where);
  b.epsilon = number(j, "epsilon", where);
  b.delta = number_or(j, "delta", -1.0, where);
  b.hill_profile = parse_time_profile(field(j, "time_profile", where), b.period);
  return b;
}

Potential parse_potential(const Json& j) {
  const std::string where = "potential";
  const std::string kind = kind_of(j, where);
  const double period = number(j, "period", where);
  if (!(period > 0.0)) throw ConfigError(where + ": period must be positive");
  Potential q = Potential::zero(period);
  if (kind == "separable") {
    q = Potential::separable(period, parse_time_profile(field(j, "time_profile", where), period),
                             parse_space_profile(field(j, "space_profile", where)));
  } else if (kind == "barrier") {
    q = build_barrier(parse_barrier(j));
  } else if (kind == "multi") {
    const Json& terms = field(j, "terms", where);
    if (!terms.is_array()) throw ConfigError(where + ": 'terms' must be an array");
    std::vector<PotentialTerm> list;
    for (const auto& t : terms) {
      list.push_back({parse_time_profile(field(t, "time_profile", where), period),
                      parse_space_profile(field(t, "space_profile", where))});
    }
    q = Potential(period, std::move(list));
  } else {
    throw ConfigError(where + ": unknown kind '" + kind + "'");
  }
  if (j.contains("support_radius")) {
    const double rho = number(j, "support_radius", where);
    if (rho < q.support_radius() * (1.0 - 1e-12)) {
      throw ConfigError(where + ": support_radius is smaller than the support of the profiles");
    }
  }
  return q;
}

NonlinearitySpec parse_nonlinearity(const Json& j) {
  const std::string where = "nonlinearity";
  NonlinearitySpec nl;
  nl.r = number_or(j, "r", 2.0, where);
  if (j.is_object() && j.contains("enabled")) nl.enabled = j.at("enabled").get<bool>();
  if (j.is_object() && j.contains("multi") && !j.at("multi").is_null()) {
    MultiTermSpec m;
    m.leading_exponent = static_cast<int>(nl.r);
    for (const auto& t : j.at("multi")) {
      const Json& e = field(t, "exponent", where);
      if (!e.is_number_integer()) throw ConfigError(where + ": multi exponent must be an integer");
      m.terms.push_back({e.get<int>(), parse_potential(field(t, "potential", where))});
    }
    nl.multi = std::move(m);
  }
  nl.validate();
  return nl;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : registry()) v.push_back(k);
    return v;
  }();
  return names;
}

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.raw = j;
  const Json& e = field(j, "experiment", "config");
  if (!e.is_string()) throw ConfigError("config: 'experiment' must be a string");
  c.experiment = e.get<std::string>();
  if (!registry().count(c.experiment)) throw ConfigError("unknown experiment '" + c.experiment + "'");
  if (j.contains("potential")) {
    c.potential = j.at("potential");
    parse_potential(c.potential);
  } else if (c.experiment != "bound-check" && c.experiment != "hill-scan") {
    throw ConfigError("config: missing field 'potential'");
  }
  if (j.contains("grid")) {
    const Json& g = j.at("grid");
    const Json& n = field(g, "n", "grid");
    if (!n.is_number_integer()) throw ConfigError("grid: 'n' must be an integer");
    c.grid = RadialGrid(number(g, "r_max", "grid"), n.get<int>());
  }
  const Json& t = section(j, "time");
  c.dt = number_or(t, "dt", 0.0, "time");
  c.horizon = number_or(t, "horizon", 0.0, "time");
  c.T = number_or(t, "T", j.contains("potential") ? number_or(j.at("potential"), "period", 0.0, "potential") : 0.0,
                  "time");
  if (c.horizon < 0.0) throw ConfigError("time: horizon must be nonnegative");
  c.nonlinearity = j.value("nonlinearity", Json::object());
  if (j.contains("nonlinearity")) parse_nonlinearity(c.nonlinearity);
  if (j.contains("seed")) {
    const Json& seed = j.at("seed");
    if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) throw ConfigError("config: 'seed' must be a nonnegative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  c.output_dir = j.value("output_dir", "");
  return c;
}

std::vector<Diagnostic> validate(const Json& j) {
  std::vector<Diagnostic> out;
  RunConfig c;
  try {
    c = parse_config(j);
  } catch (const std::exception& e) {
    out.push_back({Diagnostic::Level::Error, e.what()});
    return out;
  }
  if (c.grid && c.dt != 0.0) {
    try {
      check_cfl(*c.grid, c.dt);
    } catch (const std::exception& e) {
      out.push_back({Diagnostic::Level::Error, e.what()});
    }
  } else if (c.grid && c.experiment != "hill-scan" && c.experiment != "bound-check") {
    out.push_back({Diagnostic::Level::Error, "time.dt is required"});
  }
  if (!c.potential.is_null()) {
    const Potential q = parse_potential(c.potential);
    const double defect = periodicity_defect(q, 64);
    if (defect > 1e-10) {
      std::ostringstream msg;
      msg << "periodicity defect " << format_double(defect) << " exceeds 1e-10";
      out.push_back({Diagnostic::Level::Warning, msg.str()});
    }
    if (c.T > 0.0 && std::abs(c.T - q.period()) > 1e-12 * q.period()) {
      out.push_back({Diagnostic::Level::Error, "time.T differs from the potential period"});
    }
    if (c.grid && c.horizon > 0.0 && c.experiment != "floquet-eig" && c.experiment != "hill-scan") {
      const double need = q.support_radius() + 0.5 * c.horizon;
      if (c.grid->r_max < need) {
        std::ostringstream msg;
        msg << "r_max = " << c.grid->r_max << " < support + horizon/2 = " << need
            << "; wall reflections may reach the potential";
        out.push_back({Diagnostic::Level::Warning, msg.str()});
      }
    }
  }
  return out;
}

fs::path resolve_output_dir(const RunOptions& options, const std::string& configured) {
  if (!options.out_dir.empty()) return options.out_dir;
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("PERWAVE_OUT"); env && *env) return env;
  return "perwave_out";
}

RunResult run(const Json& config, const RunOptions& options) {
  RunResult result;
  Context ctx;
  ctx.threads = std::max(1u, options.threads);
  Json manifest = {{"config", config}, {"version", kVersion}};
  if (!options.deterministic_manifest) manifest["started"] = utc_now();
  bool have_out = false;
  try {
    ctx.config = parse_config(config);
    if (options.seed) ctx.config.seed = *options.seed;
    manifest["seed"] = ctx.config.seed;
    ctx.out = resolve_output_dir(options, ctx.config.output_dir);
    fs::create_directories(ctx.out);
    have_out = true;
    registry().at(ctx.config.experiment)(ctx);
    result.exit_code = ctx.all_passed() ? kExitOk : kExitInvariantFailed;
    result.message = ctx.all_passed() ? "ok" : "invariant check failed";
  } catch (const IntegrationError& e) {
    result.exit_code = kExitNumericalAbort;
    result.message = e.what();
  } catch (const InconsistentMatrix& e) {
    result.exit_code = kExitNumericalAbort;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitConfigError;
    result.message = e.what();
  }
  if (!have_out && result.exit_code == kExitConfigError) {
    // still try to leave a manifest when the destination is known
    try {
      ctx.out = resolve_output_dir(options, config.value("output_dir", ""));
      fs::create_directories(ctx.out);
      have_out = true;
    } catch (const std::exception&) {
    }
  }
  manifest["experiment"] = !ctx.config.experiment.empty() ? Json(ctx.config.experiment)
                                                           : config.is_object() ? config.value("experiment", Json(nullptr))
                                                                                : Json(nullptr);
  manifest["derived"] = ctx.derived;
  manifest["outputs"] = ctx.outputs;
  manifest["checks"] = ctx.checks;
  manifest["exit_code"] = result.exit_code;
  manifest["message"] = result.message;
  if (!options.deterministic_manifest) manifest["finished"] = utc_now();
  if (have_out) {
    try {
      write_file_atomic(ctx.out / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception& e) {
      result.message += std::string("; manifest not written: ") + e.what();
    }
  }
  result.manifest = std::move(manifest);
  return result;
}

Json reference_config(const std::string& experiment) {
  const double T = 2.0 * std::numbers::pi;
  const double L = std::numbers::pi / std::sqrt(0.0375);
  Json barrier = {{"kind", "barrier"},
                  {"period", T},
                  {"inner_radius", L},
                  {"epsilon", 0.05},
                  {"time_profile", {{"type", "harmonic"}, {"mean", 0.25}, {"amplitude", 0.25}}}};
  Json c = {{"experiment", experiment},
            {"potential", barrier},
            {"grid", {{"r_max", 30.0}, {"n", 1200}}},
            {"time", {{"dt", 0.0125}, {"horizon", 16 * T}, {"T", T}}},
            {"nonlinearity", {{"r", 2}}},
            {"seed", 1}};
  if (experiment == "hill-scan") {
    c["hill"] = {{"omega_sq_range", {0.0, 0.2}}, {"n", 201}, {"steps", 2000}, {"k_max", 8}};
  } else if (experiment == "linear-growth") {
    c["data"] = {{"kind", "random"}, {"radius", 15.0}, {"amplitude", 1.0}};
  } else if (experiment == "nonlinear-run") {
    const double horizon = 20 * T;
    c["grid"] = {{"r_max", 17.5 + 0.5 * horizon + 2.0}, {"n", 4096}};
    c["time"] = {{"dt", 0.02}, {"horizon", horizon}, {"T", T}};
    c["data"] = {{"kind", "mode"}, {"amplitude", 1e-3}};
  } else if (experiment == "instability") {
    c["instability"] = {{"deltas", {1e-3, 1e-4, 1e-5}}, {"eta", nullptr}, {"max_n", 100}};
  } else if (experiment == "bound-check") {
    c.erase("potential");
    c.erase("grid");
    c["bounds"] = {{"gammas", {0.1, 0.25, 0.5, 0.9}}, {"trials", 1000}, {"horizon", 3.0}};
  } else if (experiment == "multi-run") {
    c["potential"] = {{"kind", "separable"},
                      {"period", T},
                      {"time_profile", {{"type", "harmonic"}, {"mean", 1.0}, {"amplitude", 0.5}}},
                      {"space_profile", {{"type", "bump"}, {"height", 1.0}, {"radius", 3.0}}}};
    Json q1 = {{"kind", "separable"},
               {"period", T},
               {"time_profile", {{"type", "harmonic"}, {"mean", 1.0}, {"amplitude", 1.0}, {"harmonic", 2}}},
               {"space_profile", {{"type", "bump"}, {"height", 0.5}, {"radius", 2.0}}}};
    c["nonlinearity"] = {{"r", 2}, {"multi", {{{"exponent", 1}, {"potential", q1}}}}};
    c["grid"] = {{"r_max", 40.0}, {"n", 1600}};
    c["time"] = {{"dt", 0.0125}, {"horizon", 10 * T}, {"T", T}};
    c["data"] = {{"kind", "random"}, {"radius", 4.0}, {"amplitude", 2.0}};
  }
  return c;
}

RunResult reproduce_paper(const RunOptions& options) {
  const fs::path root = resolve_output_dir(options, "");
  RunResult total;
  total.manifest = {{"checks", Json::array()}};
  Json stages = Json::array();
  std::ostringstream summary;
  summary << "experiment,check,value,limit,passed\n";
  for (const char* name : {"hill-scan", "floquet-eig", "linear-growth", "nonlinear-run", "instability"}) {
    RunOptions o = options;
    o.out_dir = (root / name).string();
    o.deterministic_manifest = options.deterministic_manifest;
    Json config = reference_config(name);
    if (options.seed) config["seed"] = *options.seed;
    const RunResult r = run(config, o);
    stages.push_back({{"experiment", name}, {"exit_code", r.exit_code}, {"message", r.message}});
    for (const auto& c : r.manifest["checks"]) {
      summary << name << ',' << c["name"].get<std::string>() << ',' << format_double(c["value"].get<double>())
              << ',' << format_double(c["limit"].get<double>()) << ',' << (c["passed"].get<bool>() ? 1 : 0)
              << '\n';
    }
    for (auto c : r.manifest["checks"]) {
      c["name"] = std::string(name) + "/" + c["name"].get<std::string>();
      total.manifest["checks"].push_back(c);
    }
    if (r.exit_code > total.exit_code) total.exit_code = r.exit_code;
  }
  write_file_atomic(root / "summary.csv", summary.str());
  total.manifest["version"] = kVersion;
  total.manifest["stages"] = stages;
  total.manifest["outputs"] = {"summary.csv"};
  total.manifest["exit_code"] = total.exit_code;
  total.message = total.exit_code == kExitOk ? "all stages passed" : "some stages failed";
  write_file_atomic(root / "manifest.json", total.manifest.dump(2) + "\n");
  return total;
}

std::string format_checks(const Json& manifest) {
  std::ostringstream out;
  if (!manifest.contains("checks")) return "";
  std::size_t width = 5;
  for (const auto& c : manifest["checks"]) width = std::max(width, c["name"].get<std::string>().size());
  for (const auto& c : manifest["checks"]) {
    const std::string name = c["name"].get<std::string>();
    out << (c["passed"].get<bool>() ? "PASS  " : "FAIL  ") << name << std::string(width - name.size() + 2, ' ')
        << "value " << format_double(c["value"].get<double>()) << "  limit "
        << format_double(c["limit"].get<double>()) << '\n';
  }
  return out.str();
}

}  // namespace perwave
