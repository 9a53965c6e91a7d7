#pragma once

#include <complex>
#include <cstdint>
#include <optional>

#include "perwave/potential.hpp"
#include "perwave/radial_grid.hpp"
#include "perwave/wave_system.hpp"

namespace perwave {

/// Linear propagator V(t, s) of v_tt = v_rr - q(t, r) v on a fixed grid.
class LinearPropagator {
 public:
  LinearPropagator(const Potential& potential, const RadialGrid& grid);

  /// Throws ConfigError when dt violates the CFL bound.
  State step(const State& state, double t, double dt) const;
  template <class Scalar>
  BasicState<Scalar> propagate(const BasicState<Scalar>& state, double t0, double t1,
                               double dt) const;

  const WaveSystem& system() const { return system_; }
  const RadialGrid& grid() const { return system_.grid(); }

 private:
  WaveSystem system_;
};

State step_linear(const State& state, const Potential& potential, double t, double dt);
State propagate(const State& state, const Potential& potential, double t0, double t1, double dt);
ComplexState propagate(const ComplexState& state, const Potential& potential, double t0, double t1,
                       double dt);

/// ||U(T, 0) f - U0(T) f + integral_0^T U0(T - s) Q(s) U(s, 0) f ds||_0. The left side
/// runs the solver with and without q; inside the integral U0 is the exact free group of
/// the semi-discrete system (sine modes) and the quadrature is the trapezoid rule on the
/// uniform steps T / ceil(T / dt). Verlet is a kick splitting, so using its own free
/// flow in the integral would make the residual vanish identically; with the exact group
/// it measures the O(dt^2) consistency of the solver.
double duhamel_residual(const State& state, const Potential& potential, double T, double dt);

/// Grid on [0, L] for the interior Dirichlet problem: the wall sits at r = L.
RadialGrid interior_grid(double inner_radius, int n);

/// Dirichlet mode v = y sin(k pi r / L), w = y' sin(k pi r / L) on an interior grid.
State interior_mode(const RadialGrid& grid, int k, double y, double dy);

/// Propagates the interior problem v_tt = v_rr - forcing(t) chi(r) v on the ball r <= L
/// (L = grid.r_max). chi equals 1 on r <= L - ramp with ramp = max(delta, 2 dr); with
/// delta = 0 the cutoff is identically 1 on the ball.
State interior_propagate(const State& state, const TimeProfile& forcing, double t0, double t1,
                         double dt, double delta = 0.0);

struct FloquetResult {
  double magnitude = 0.0;
  std::complex<double> eigenvalue;
  /// ||P phi - y phi||_1 / ||phi||_1, or the two-step fit residual for a complex pair.
  double residual = 0.0;
  int iterations = 0;
  State eigenstate;
  bool converged = false;
  bool complex_pair = false;
};

struct PowerIterationOptions {
  int max_iter = 200;
  double tol = 1e-6;
  std::uint64_t seed = 1;
  /// Starting vector; a seeded random smooth state over the potential support otherwise.
  std::optional<State> initial;
};

/// Dominant eigenvalue of the one-period map V(T, 0) by normalized power iteration.
/// Non-convergence is reported through `converged`, not thrown.
FloquetResult dominant_eigenvalue(const Potential& potential, double T, double dt,
                                  const RadialGrid& grid, const PowerIterationOptions& options = {});

/// Least-squares slope of ln||state(nT)||_1 against nT over the last half of n_periods
/// periods. The state is renormalized every period and the log offsets accumulated, so
/// the result never overflows. Throws DomainError for n_periods < 4.
double growth_rate(const Potential& potential, const State& data, int n_periods, double T,
                   double dt);

/// Per-period log norms ln||state(nT)||_1, n = 0..n_periods, with renormalization.
std::vector<double> log_norm_series(const LinearPropagator& propagator, const State& data,
                                    int n_periods, double T, double dt);

/// Least-squares slope of ys against xs.
double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace perwave
