#include "perwave/instability_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "perwave/errors.hpp"
#include "perwave/parallel.hpp"

namespace perwave {

namespace {

double norm1(const State& s) { return energy_norms(s).norm1(); }

State normalized(const State& s) {
  const double n = norm1(s);
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero state");
  return (1.0 / n) * s;
}

EvolveOptions endpoints_only() {
  EvolveOptions o;
  o.report_every = std::numeric_limits<int>::max();
  return o;
}

}  // namespace

PeriodMap::PeriodMap(const Potential& potential, const NonlinearitySpec& nl, const RadialGrid& grid,
                     double T, double dt)
    : potential_(potential), nl_(nl), linear_(potential, grid), T_(T), dt_(dt) {
  nl_.validate();
  check_cfl(grid, dt);
  if (!(T > 0.0)) throw DomainError("period must be positive");
}

State PeriodMap::operator()(const State& state) const {
  const auto tr = evolve(state, potential_, nl_, 0.0, T_, dt_, endpoints_only());
  if (tr.aborted) throw IntegrationError(tr.diagnostic);
  return tr.last;
}

State PeriodMap::linear(const State& state) const { return linear_.propagate(state, 0.0, T_, dt_); }

State monodromy_map(const State& state, const Potential& potential, const NonlinearitySpec& nl,
                    double T, double dt) {
  return PeriodMap(potential, nl, state.grid, T, dt)(state);
}

FrechetResult frechet_slope(const Potential& potential, const NonlinearitySpec& nl, double T,
                            double dt, const State& direction, const std::vector<double>& scales) {
  if (scales.size() < 4) throw DomainError("frechet_slope needs at least 4 scales");
  const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
  if (!(*lo > 0.0) || *hi > 1.0) throw DomainError("scales must lie in (0, 1]");
  if (*hi / *lo < 100.0 * (1.0 - 1e-12)) throw DomainError("scales must span two decades");
  const PeriodMap map(potential, nl, direction.grid, T, dt);
  const State h = normalized(direction);

  FrechetResult result;
  std::vector<double> xs, ys;
  bool all_zero = true;
  for (double s : scales) {
    const State sh = s * h;
    const State lin = map.linear(sh);
    const double rem = norm1(map(sh) - lin);
    result.scales.push_back(s);
    result.remainders.push_back(rem);
    if (rem != 0.0) all_zero = false;
    // rounding floor of the difference of two O(||L sh||) quantities
    if (rem > 1e-12 * norm1(lin)) {
      xs.push_back(std::log(s));
      ys.push_back(std::log(rem));
    }
  }
  result.used = static_cast<int>(xs.size());
  if (all_zero || !nl.enabled) {
    result.exact_linear = true;
    result.slope = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  if (xs.size() < 3) throw DomainError("fewer than 3 remainders above the rounding floor");
  result.slope = ls_slope(xs, ys);
  return result;
}

double default_eta(const State& eigenstate, const Potential& potential, const NonlinearitySpec& nl) {
  const State phi = normalized(eigenstate);
  const auto e = energy_report(phi, potential, NonlinearitySpec::power(nl.r), 0.0);
  if (!(e.potential_term > 0.0) || !(e.nonlinear_term > 0.0)) {
    throw DomainError("default_eta needs positive potential and nonlinear energies");
  }
  return 0.1 * std::pow(e.potential_term / e.nonlinear_term, 1.0 / nl.r);
}

std::vector<InstabilityRun> instability_certificate(const Potential& potential,
                                                    const NonlinearitySpec& nl, double T, double dt,
                                                    const FloquetResult& dominant,
                                                    const std::vector<double>& deltas, double eta,
                                                    const CertificateOptions& options) {
  const State phi = normalized(dominant.eigenstate);
  const PeriodMap map(potential, nl, phi.grid, T, dt);
  const double rho = dominant.magnitude;
  std::vector<InstabilityRun> runs(deltas.size());
  parallel_for(deltas.size(), options.threads, [&](std::size_t idx) {
    InstabilityRun& run = runs[idx];
    run.delta = deltas[idx];
    run.eta = eta;
    run.rho = rho;
    if (!(rho > 1.0)) {
      run.diagnostic = "dominant multiplier does not exceed 1; nothing to certify";
    }
    State w = run.delta * phi;
    run.iterates.push_back(norm1(w));
    for (int n = 1; n <= options.max_n; ++n) {
      w = map(w);
      run.iterates.push_back(norm1(w));
      if (run.iterates.back() > eta) {
        run.escaped_at = n;
        const double before = std::log(run.iterates[run.iterates.size() - 2]);
        const double after = std::log(run.iterates.back());
        run.escape_time = (n - 1) + (std::log(eta) - before) / (after - before);
        break;
      }
    }
    // growth requirement on every N whose iterates so far stay inside the eta-ball
    run.growth_bound_held = true;
    const double w0 = run.iterates.front();
    for (std::size_t n = 0; n < run.iterates.size(); ++n) {
      if (run.iterates[n] > eta) break;
      if (run.iterates[n] < options.growth_constant * std::pow(rho, static_cast<double>(n)) * w0) {
        run.growth_bound_held = false;
        std::ostringstream msg;
        msg << "growth fell below " << options.growth_constant << " rho^N ||w_0|| at N = " << n;
        run.diagnostic = msg.str();
        break;
      }
    }
    if (!run.escaped_at && run.diagnostic.empty()) {
      std::ostringstream msg;
      msg << "no escape within " << options.max_n << " periods (eta too large or rho misestimated)";
      run.diagnostic = msg.str();
    }
    run.certificate = rho > 1.0 && run.escaped_at.has_value() && run.growth_bound_held;
  });
  return runs;
}

SaturationReport saturation_contrast(const Potential& potential, const NonlinearitySpec& nl,
                                     double T, double dt, const State& eigenstate, double delta,
                                     double horizon) {
  nl.validate();
  const RadialGrid& grid = eigenstate.grid;
  const int per_period = step_count(T, dt);
  const double h = T / per_period;
  const int periods = std::max(1, static_cast<int>(std::floor(horizon / T + 1e-9)));
  const State w0 = delta * normalized(eigenstate);

  SaturationReport rep;
  EvolveOptions options;
  options.report_every = per_period;
  // both runs go through the same integrator call, so they agree bit for bit when the
  // nonlinearity is disabled
  NonlinearitySpec linear_spec = nl;
  linear_spec.enabled = false;
  const auto lin = evolve(w0, potential, linear_spec, 0.0, periods * T, h, options);
  const auto tr = evolve(w0, potential, nl, 0.0, periods * T, h, options);
  if (tr.aborted) throw IntegrationError(tr.diagnostic);
  for (const auto& rp : lin.reports) rep.times.push_back(rp.t);
  for (const auto& n : lin.norms) rep.linear_norms.push_back(n.norm1());
  for (const auto& n : tr.norms) rep.nonlinear_norms.push_back(n.norm1());

  for (std::size_t k = 0; k < rep.times.size() && k < rep.nonlinear_norms.size(); ++k) {
    const double l = rep.linear_norms[k];
    if (std::abs(rep.nonlinear_norms[k] - l) > 0.1 * l) {
      rep.divergence_time = rep.times[k];
      break;
    }
  }

  std::vector<double> xs, ly, py;
  const double power = 2.0 * nl.r / (nl.r + 2.0);
  for (std::size_t k = rep.times.size() / 2; k < rep.times.size(); ++k) {
    xs.push_back(rep.times[k]);
    ly.push_back(std::log(rep.linear_norms[k]));
    py.push_back(std::pow(rep.nonlinear_norms[k], power));
  }
  if (xs.size() >= 2) {
    rep.linear_rate = ls_slope(xs, ly);
    rep.nonlinear_power_slope = ls_slope(xs, py);
  }
  if (nl.enabled) {
    rep.C2 = energy_rate_constant(potential, nl, grid);
    rep.envelope = check_envelopes(tr, rep.C2, nl.r);
  }
  return rep;
}

}  // namespace perwave
