#include "perwave/hill_floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "perwave/errors.hpp"
#include "perwave/parallel.hpp"

namespace perwave {

namespace {

// Fixed-step RK4 for the pair (y, y') of y'' = -(omega_sq + f(t)) y. Both fundamental
// solutions are advanced together so the forcing is evaluated once per stage.
std::array<double, 4> integrate_fundamental(const HillProblem& p, int steps) {
  const double h = p.period / steps;
  // columns: (y1, y1', y2, y2')
  std::array<double, 4> s{1.0, 0.0, 0.0, 1.0};
  auto coef = [&](double t) {
    const double c = p.omega_sq + p.forcing(t);
    if (!std::isfinite(c)) {
      throw IntegrationError("non-finite Hill coefficient at t = " + std::to_string(t));
    }
    return c;
  };
  auto rhs = [](double c, const std::array<double, 4>& y) {
    return std::array<double, 4>{y[1], -c * y[0], y[3], -c * y[2]};
  };
  for (int i = 0; i < steps; ++i) {
    const double t = i * h;
    const double c0 = coef(t);
    const double cm = coef(t + 0.5 * h);
    const double c1 = coef(t + h);
    const auto k1 = rhs(c0, s);
    std::array<double, 4> tmp;
    for (int j = 0; j < 4; ++j) tmp[j] = s[j] + 0.5 * h * k1[j];
    const auto k2 = rhs(cm, tmp);
    for (int j = 0; j < 4; ++j) tmp[j] = s[j] + 0.5 * h * k2[j];
    const auto k3 = rhs(cm, tmp);
    for (int j = 0; j < 4; ++j) tmp[j] = s[j] + h * k3[j];
    const auto k4 = rhs(c1, tmp);
    for (int j = 0; j < 4; ++j) s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  for (double x : s) {
    if (!std::isfinite(x)) throw IntegrationError("Hill integration overflowed");
  }
  return s;
}

}  // namespace

HillProblem mathieu_problem(double a, double p) {
  HillProblem hp;
  hp.omega_sq = a - 2.0 * p;
  hp.forcing = [p](double t) { return 2.0 * p * (1.0 - std::cos(2.0 * t)); };
  hp.period = std::numbers::pi;
  return hp;
}

MonodromyMatrix2 monodromy(const HillProblem& problem, int steps) {
  if (steps < 16) throw DomainError("monodromy needs at least 16 steps");
  if (!(problem.period > 0.0)) throw DomainError("Hill period must be positive");
  const auto s = integrate_fundamental(problem, steps);
  MonodromyMatrix2 m;
  m.entries = {s[0], s[2], s[1], s[3]};
  m.integrator_steps = steps;
  m.est_error = m.det() - 1.0;
  return m;
}

FloquetPair multipliers(const MonodromyMatrix2& m, double det_tolerance) {
  double scale = 1.0;
  for (double x : m.entries) scale = std::max(scale, x * x);
  if (std::abs(m.det() - 1.0) > det_tolerance * scale) {
    throw InconsistentMatrix("monodromy determinant " + std::to_string(m.det()) +
                             " is not 1 within tolerance");
  }
  FloquetPair f;
  f.trace = m.trace();
  const double half = 0.5 * f.trace;
  f.unstable = std::abs(f.trace) > 2.0 + 1e-12;
  if (f.unstable) {
    // Larger root first; the smaller is its reciprocal, avoiding cancellation.
    const double big = half + std::copysign(std::sqrt(half * half - 1.0), half);
    f.mu1 = big;
    f.mu2 = 1.0 / big;
  } else {
    const double im = std::sqrt(std::max(0.0, 1.0 - half * half));
    f.mu1 = {half, im};
    f.mu2 = {half, -im};
  }
  return f;
}

std::array<double, 2> dominant_floquet_vector(const MonodromyMatrix2& m, const FloquetPair& pair) {
  const double mu = pair.mu1.real();
  // (M - mu I) x = 0: use the row with the larger entries.
  const double a = m(0, 0) - mu, b = m(0, 1);
  const double c = m(1, 0), d = m(1, 1) - mu;
  std::array<double, 2> x;
  if (std::hypot(a, b) >= std::hypot(c, d)) {
    x = {b, -a};
  } else {
    x = {d, -c};
  }
  const double norm = std::hypot(x[0], x[1]);
  if (norm == 0.0) return {1.0, 0.0};
  return {x[0] / norm, x[1] / norm};
}

std::vector<TonguePoint> tongue_scan(const std::function<double(double)>& forcing, double period,
                                     std::pair<double, double> omega_sq_range, int n, int steps,
                                     unsigned threads) {
  if (n < 2) throw DomainError("tongue_scan needs n >= 2");
  const auto [lo, hi] = omega_sq_range;
  if (!(lo >= 0.0) || !(hi >= lo)) throw DomainError("tongue_scan range must be nonnegative");
  std::vector<TonguePoint> out(static_cast<std::size_t>(n));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    HillProblem p;
    p.omega_sq = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    p.forcing = forcing;
    p.period = period;
    const auto m = monodromy(p, steps);
    const auto f = multipliers(m);
    out[i] = {p.omega_sq, f.trace, f.max_abs(), f.unstable, std::abs(m.est_error)};
  });
  return out;
}

std::vector<std::pair<double, double>> instability_intervals(const std::vector<TonguePoint>& scan) {
  std::vector<std::pair<double, double>> runs;
  bool open = false;
  for (const auto& p : scan) {
    if (p.unstable) {
      if (!open) runs.emplace_back(p.omega_sq, p.omega_sq);
      runs.back().second = p.omega_sq;
      open = true;
    } else {
      open = false;
    }
  }
  return runs;
}

std::optional<UnstableMode> pick_unstable_mode(const BarrierSpec& spec, int k_max, int steps) {
  if (k_max < 1) throw DomainError("pick_unstable_mode needs k_max >= 1");
  const auto profile = spec.hill_profile;
  for (int k = 1; k <= k_max; ++k) {
    HillProblem p;
    const double kpl = k * std::numbers::pi / spec.inner_radius;
    p.omega_sq = kpl * kpl;
    p.forcing = [profile](double t) { return profile.value(t); };
    p.period = spec.period;
    const auto m = monodromy(p, steps);
    const auto f = multipliers(m);
    if (f.unstable) return UnstableMode{k, p.omega_sq, f, m, dominant_floquet_vector(m, f)};
  }
  return std::nullopt;
}

}  // namespace perwave
