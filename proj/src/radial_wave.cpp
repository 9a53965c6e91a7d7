#include "perwave/radial_wave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <gsl/gsl_fft_real.h>

#include "perwave/errors.hpp"

namespace perwave {

namespace {

double norm1(const State& s) { return energy_norms(s).norm1(); }

void scale_in_place(State& s, double k) {
  for (auto& x : s.v) x *= k;
  for (auto& x : s.w) x *= k;
}

// Sine modes sin(j pi (i + 1) / n), j = 1..n-1, of the three-point Dirichlet Laplacian
// on the grid, and the exact free evolution of their amplitudes. Transforms use the odd
// extension of length 2n and GSL's mixed-radix real FFT.
class SineModes {
 public:
  explicit SineModes(const RadialGrid& grid)
      : n_(static_cast<std::size_t>(grid.n)),
        buffer_(2 * n_),
        wavetable_(gsl_fft_real_wavetable_alloc(2 * n_)),
        workspace_(gsl_fft_real_workspace_alloc(2 * n_)) {
    omega_.resize(n_ - 1);
    for (std::size_t j = 1; j < n_; ++j) {
      omega_[j - 1] = 2.0 / grid.dr() * std::sin(std::numbers::pi * j / (2.0 * n_));
    }
  }
  ~SineModes() {
    gsl_fft_real_wavetable_free(wavetable_);
    gsl_fft_real_workspace_free(workspace_);
  }
  SineModes(const SineModes&) = delete;
  SineModes& operator=(const SineModes&) = delete;

  std::size_t size() const { return n_ - 1; }

  // coef_j = (2 / n) sum_m x_m sin(j pi m / n), so that x = sum_j coef_j sin(j pi m / n)
  void forward(const std::vector<double>& x, std::vector<double>& coef) const {
    transform(x, coef);
    for (double& c : coef) c *= 2.0 / static_cast<double>(n_);
  }
  void inverse(const std::vector<double>& coef, std::vector<double>& x) const {
    std::vector<double> out;
    transform(coef, out);
    x.assign(n_, 0.0);
    std::copy(out.begin(), out.end(), x.begin());
  }
  // exact free flow of (position, velocity) amplitudes over time h
  void rotate(std::vector<double>& pos, std::vector<double>& vel, double h) const {
    for (std::size_t j = 0; j < pos.size(); ++j) {
      const double w = omega_[j], c = std::cos(w * h), s = std::sin(w * h);
      const double p = pos[j], v = vel[j];
      pos[j] = c * p + s / w * v;
      vel[j] = -w * s * p + c * v;
    }
  }

 private:
  // y_j = sum_{m=1}^{n-1} x_m sin(j pi m / n) for j = 1..n-1; x_m is node m - 1
  void transform(const std::vector<double>& x, std::vector<double>& y) const {
    std::fill(buffer_.begin(), buffer_.end(), 0.0);
    for (std::size_t m = 1; m < n_; ++m) {
      buffer_[m] = x[m - 1];
      buffer_[2 * n_ - m] = -x[m - 1];
    }
    gsl_fft_real_transform(buffer_.data(), 1, 2 * n_, wavetable_, workspace_);
    // half-complex layout: Im of frequency j sits at index 2j; FFT gives -2i sum x sin
    y.resize(n_ - 1);
    for (std::size_t j = 1; j < n_; ++j) y[j - 1] = -0.5 * buffer_[2 * j];
  }

  std::size_t n_;
  std::vector<double> omega_;
  mutable std::vector<double> buffer_;
  gsl_fft_real_wavetable* wavetable_;
  gsl_fft_real_workspace* workspace_;
};

}  // namespace

LinearPropagator::LinearPropagator(const Potential& potential, const RadialGrid& grid)
    : system_(grid, potential) {}

State LinearPropagator::step(const State& state, double t, double dt) const {
  check_cfl(grid(), dt);
  State out = state;
  std::vector<double> acc(out.v.size());
  system_.acceleration<double>(t, out.v, acc);
  system_.verlet_step(out, acc, t, dt);
  return out;
}

template <class Scalar>
BasicState<Scalar> LinearPropagator::propagate(const BasicState<Scalar>& state, double t0,
                                               double t1, double dt) const {
  check_cfl(grid(), dt);
  if (state.grid.n != grid().n || state.grid.r_max != grid().r_max) {
    throw ConfigError("state grid does not match the propagator grid");
  }
  BasicState<Scalar> out = state;
  march(system_, out, t0, t1, dt);
  return out;
}

template State LinearPropagator::propagate(const State&, double, double, double) const;
template ComplexState LinearPropagator::propagate(const ComplexState&, double, double, double) const;

State step_linear(const State& state, const Potential& potential, double t, double dt) {
  return LinearPropagator(potential, state.grid).step(state, t, dt);
}

State propagate(const State& state, const Potential& potential, double t0, double t1, double dt) {
  return LinearPropagator(potential, state.grid).propagate(state, t0, t1, dt);
}

ComplexState propagate(const ComplexState& state, const Potential& potential, double t0, double t1,
                       double dt) {
  return LinearPropagator(potential, state.grid).propagate(state, t0, t1, dt);
}

double duhamel_residual(const State& state, const Potential& potential, double T, double dt) {
  const RadialGrid& grid = state.grid;
  check_cfl(grid, dt);
  const int steps = step_count(T, dt);
  if (steps == 0) return 0.0;
  const double h = T / steps;
  const WaveSystem full(grid, potential);
  const WaveSystem free(grid, Potential::zero(potential.period()));
  const std::size_t n = state.v.size();
  const SineModes modes(grid);

  // Horner form of the trapezoid sum S <- U0(h) S + c_k h (0, q(t_k) v(t_k)) in modal
  // coordinates, where U0 is the exact free group of the semi-discrete system.
  State u = state;
  std::vector<double> pos(modes.size(), 0.0), vel(modes.size(), 0.0), q(n), src(n), coef;
  auto add_source = [&](double t, double c) {
    full.potential().sample(t, q);
    for (std::size_t i = 0; i < n; ++i) src[i] = q[i] * u.v[i];
    modes.forward(src, coef);
    for (std::size_t j = 0; j < coef.size(); ++j) vel[j] += c * coef[j];
  };
  add_source(0.0, 0.5 * h);
  std::vector<double> acc_u(n);
  full.acceleration<double>(0.0, u.v, acc_u);
  for (int k = 1; k <= steps; ++k) {
    full.verlet_step(u, acc_u, (k - 1) * h, h);
    modes.rotate(pos, vel, h);
    add_source(k * h, k == steps ? 0.5 * h : h);
  }
  State s(grid);
  modes.inverse(pos, s.v);
  modes.inverse(vel, s.w);

  // the left side uses the solver for both propagators so that q = 0 cancels exactly
  State u0 = state;
  march(free, u0, 0.0, T, h);
  const State diff = (u - u0) + s;
  return energy_norms(diff).norm0();
}

RadialGrid interior_grid(double inner_radius, int n) { return RadialGrid(inner_radius, n); }

State interior_mode(const RadialGrid& grid, int k, double y, double dy) {
  State s(grid);
  for (int i = 0; i + 1 < grid.n; ++i) {
    const double m = std::sin(k * std::numbers::pi * grid.r(i) / grid.r_max);
    s.v[static_cast<std::size_t>(i)] = y * m;
    s.w[static_cast<std::size_t>(i)] = dy * m;
  }
  return s;
}

State interior_propagate(const State& state, const TimeProfile& forcing, double t0, double t1,
                         double dt, double delta) {
  const RadialGrid& grid = state.grid;
  const double L = grid.r_max;
  const double dr = grid.dr();
  // delta = 0: put the ramp beyond the wall so chi = 1 on every node of the ball
  const SpaceProfile chi = delta > 0.0 ? SpaceProfile::plateau(1.0, L, std::max(delta, 2.0 * dr))
                                       : SpaceProfile::plateau(1.0, L + 4.0 * dr, 2.0 * dr);
  const double period = forcing.period() > 0.0 ? forcing.period() : 1.0;
  const Potential potential(period, {{forcing, chi}});
  return propagate(state, potential, t0, t1, dt);
}

FloquetResult dominant_eigenvalue(const Potential& potential, double T, double dt,
                                  const RadialGrid& grid, const PowerIterationOptions& options) {
  const LinearPropagator period_map(potential, grid);
  check_cfl(grid, dt);
  State x = options.initial ? *options.initial
                            : random_smooth_state(grid, std::clamp(potential.support_radius(), 1.0, grid.r_max),
                                                  options.seed);
  const double n0 = norm1(x);
  if (!(n0 > 0.0)) throw DomainError("power iteration needs a nonzero starting state");
  scale_in_place(x, 1.0 / n0);

  FloquetResult result;
  std::optional<State> prev_x, prev_y;
  std::vector<double> log_growth;
  for (int it = 1; it <= options.max_iter; ++it) {
    const State y = period_map.propagate(x, 0.0, T, dt);
    const double ny = norm1(y);
    if (!std::isfinite(ny) || ny == 0.0) break;
    log_growth.push_back(std::log(ny));
    result.iterations = it;

    // x is normalized, so <x, x>_1 = 1
    const double lambda = inner1(x, y);
    const double res = norm1(y - lambda * x);
    result.eigenvalue = lambda;
    result.magnitude = std::abs(lambda);
    result.residual = res;
    result.eigenstate = x;
    result.complex_pair = false;
    if (res < options.tol) {
      result.converged = true;
      return result;
    }

    if (prev_x) {
      // Two-step fit u2 = alpha u1 + beta u0 over the Krylov pair.
      const State& u0 = *prev_x;
      const State& u1 = *prev_y;
      const State u2 = norm1(u1) * y;
      const double g11 = inner1(u1, u1), g10 = inner1(u1, u0), g00 = inner1(u0, u0);
      const double b1 = inner1(u1, u2), b0 = inner1(u0, u2);
      const double det = g11 * g00 - g10 * g10;
      if (det > 1e-10 * g11 * g00) {
        const double alpha = (b1 * g00 - b0 * g10) / det;
        const double beta = (g11 * b0 - g10 * b1) / det;
        const double disc = alpha * alpha + 4.0 * beta;
        const double res2 = norm1(u2 - alpha * u1 - beta * u0) / norm1(u1);
        if (disc < 0.0 && res2 < res) {
          result.eigenvalue = {0.5 * alpha, 0.5 * std::sqrt(-disc)};
          result.magnitude = std::sqrt(-beta);
          result.residual = res2;
          result.complex_pair = true;
          if (res2 < options.tol) {
            result.converged = true;
            return result;
          }
        }
      }
    }
    prev_x = x;
    prev_y = y;
    x = (1.0 / ny) * y;
  }
  if (!result.complex_pair && !log_growth.empty()) {
    // Without a converged eigenpair the mean growth over the second half is the better
    // estimate of the spectral radius than one Rayleigh quotient.
    const std::size_t start = log_growth.size() / 2;
    double sum = 0.0;
    for (std::size_t i = start; i < log_growth.size(); ++i) sum += log_growth[i];
    result.magnitude = std::exp(sum / static_cast<double>(log_growth.size() - start));
  }
  return result;
}

std::vector<double> log_norm_series(const LinearPropagator& propagator, const State& data,
                                    int n_periods, double T, double dt) {
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(n_periods) + 1);
  State s = data;
  double offset = 0.0;
  double n = norm1(s);
  if (!(n > 0.0)) throw DomainError("growth measurement needs nonzero data");
  logs.push_back(std::log(n));
  for (int p = 1; p <= n_periods; ++p) {
    scale_in_place(s, 1.0 / n);
    offset += std::log(n);
    s = propagator.propagate(s, (p - 1) * T, p * T, dt);
    n = norm1(s);
    if (!std::isfinite(n) || n == 0.0) throw IntegrationError("norm became non-finite or zero");
    logs.push_back(offset + std::log(n));
  }
  return logs;
}

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double m = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  return sxy / sxx;
}

double growth_rate(const Potential& potential, const State& data, int n_periods, double T,
                   double dt) {
  if (n_periods < 4) throw DomainError("growth_rate needs at least 4 periods");
  const LinearPropagator propagator(potential, data.grid);
  const auto logs = log_norm_series(propagator, data, n_periods, T, dt);
  std::vector<double> xs, ys;
  for (int p = (n_periods + 1) / 2; p <= n_periods; ++p) {
    xs.push_back(p * T);
    ys.push_back(logs[static_cast<std::size_t>(p)]);
  }
  return ls_slope(xs, ys);
}

}  // namespace perwave
