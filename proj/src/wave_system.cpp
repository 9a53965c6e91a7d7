#include "perwave/wave_system.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "perwave/errors.hpp"

namespace perwave {

GridPotential::GridPotential(const Potential& potential, const RadialGrid& grid)
    : static_part_(static_cast<std::size_t>(grid.n), 0.0) {
  for (const auto& term : potential.terms()) {
    std::vector<double> space(static_cast<std::size_t>(grid.n));
    bool any = false;
    for (int i = 0; i < grid.n; ++i) {
      space[static_cast<std::size_t>(i)] = term.space.value(grid.r(i));
      any = any || space[static_cast<std::size_t>(i)] != 0.0;
    }
    if (!any) continue;
    if (term.time.is_static()) {
      const double a = term.time.value(0.0);
      if (a == 0.0) continue;
      for (std::size_t i = 0; i < space.size(); ++i) static_part_[i] += a * space[i];
      zero_ = false;
    } else {
      dynamic_.push_back({term.time, std::move(space)});
      zero_ = false;
    }
  }
}

void GridPotential::sample(double t, std::span<double> out) const {
  std::copy(static_part_.begin(), static_part_.end(), out.begin());
  for (const auto& term : dynamic_) {
    const double a = term.time.value(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * term.space[i];
  }
}

void GridPotential::sample_time_derivative(double t, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& term : dynamic_) {
    const double a = term.time.derivative(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * term.space[i];
  }
}

WaveSystem::WaveSystem(const RadialGrid& grid, const Potential& potential,
                       std::optional<double> exponent, std::vector<PowerTerm> extra)
    : grid_(grid), potential_(potential, grid), exponent_(exponent) {
  if (exponent_ && !(*exponent_ > 0.0)) throw ConfigError("nonlinear exponent must be positive");
  for (auto& term : extra) {
    GridPotential coefficient(term.coefficient, grid);
    if (!coefficient.is_zero()) extra_.push_back({term.exponent, std::move(coefficient)});
  }
  inv_r_.resize(static_cast<std::size_t>(grid.n));
  for (int i = 0; i < grid.n; ++i) inv_r_[static_cast<std::size_t>(i)] = 1.0 / grid.r(i);
}

template <class Scalar>
void WaveSystem::linear_acceleration(double t, std::span<const Scalar> v, std::span<Scalar> a) const {
  const std::size_t n = v.size();
  const double inv_dr2 = 1.0 / (grid_.dr() * grid_.dr());
  thread_local std::vector<double> q;
  q.resize(n);
  potential_.sample(t, q);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Scalar left = i == 0 ? Scalar{} : v[i - 1];
    a[i] = (left - 2.0 * v[i] + v[i + 1]) * inv_dr2 - q[i] * v[i];
  }
  a[n - 1] = Scalar{};
}

template <class Scalar>
void WaveSystem::add_nonlinear_force(double t, std::span<const Scalar> v, std::span<Scalar> a) const {
  const std::size_t n = v.size();
  if (exponent_) {
    const double p = *exponent_;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      a[i] -= abs_pow(std::abs(v[i]) * inv_r_[i], p) * v[i];
    }
  }
  if (extra_.empty()) return;
  thread_local std::vector<double> q;
  q.resize(n);
  for (const auto& term : extra_) {
    term.coefficient.sample(t, q);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (q[i] == 0.0) continue;
      a[i] -= q[i] * abs_pow(std::abs(v[i]) * inv_r_[i], term.exponent) * v[i];
    }
  }
}

template <class Scalar>
void WaveSystem::acceleration(double t, std::span<const Scalar> v, std::span<Scalar> a) const {
  linear_acceleration(t, v, a);
  if (has_nonlinearity()) add_nonlinear_force(t, v, a);
}

template <class Scalar>
void WaveSystem::verlet_step(BasicState<Scalar>& state, std::vector<Scalar>& acc, double t,
                             double h) const {
  const std::size_t n = state.v.size();
  const double half = 0.5 * h;
  for (std::size_t i = 0; i < n; ++i) {
    state.w[i] += half * acc[i];
    state.v[i] += h * state.w[i];
  }
  state.v[n - 1] = Scalar{};
  acceleration<Scalar>(t + h, state.v, acc);
  for (std::size_t i = 0; i < n; ++i) state.w[i] += half * acc[i];
  state.w[n - 1] = Scalar{};
}

template <class Scalar>
double WaveSystem::nonlinear_stiffness(std::span<const Scalar> v) const {
  if (!exponent_) return 0.0;
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]) * inv_r_[i]);
  return abs_pow(m, *exponent_);
}

using Complex = std::complex<double>;
template void WaveSystem::acceleration<double>(double, std::span<const double>, std::span<double>) const;
template void WaveSystem::acceleration<Complex>(double, std::span<const Complex>, std::span<Complex>) const;
template void WaveSystem::linear_acceleration<double>(double, std::span<const double>,
                                                      std::span<double>) const;
template void WaveSystem::linear_acceleration<Complex>(double, std::span<const Complex>,
                                                       std::span<Complex>) const;
template void WaveSystem::add_nonlinear_force<double>(double, std::span<const double>,
                                                      std::span<double>) const;
template void WaveSystem::add_nonlinear_force<Complex>(double, std::span<const Complex>,
                                                       std::span<Complex>) const;
template void WaveSystem::verlet_step<double>(State&, std::vector<double>&, double, double) const;
template void WaveSystem::verlet_step<std::complex<double>>(ComplexState&,
                                                            std::vector<std::complex<double>>&,
                                                            double, double) const;
template double WaveSystem::nonlinear_stiffness<double>(std::span<const double>) const;
template double WaveSystem::nonlinear_stiffness<std::complex<double>>(
    std::span<const std::complex<double>>) const;

double abs_pow(double x, double p) {
  x = std::abs(x);
  if (p == 0.0) return 1.0;
  if (p == 1.0) return x;
  if (p == 2.0) return x * x;
  if (p == 3.0) return x * x * x;
  if (p == 4.0) return (x * x) * (x * x);
  return std::pow(x, p);
}

void check_cfl(const RadialGrid& grid, double dt) {
  if (!(dt > 0.0) || dt > grid.dr() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "CFL violated: dt = " << dt << " must lie in (0, dr = " << grid.dr() << "]";
    throw ConfigError(msg.str());
  }
}

int step_count(double span, double dt) {
  if (!(span >= 0.0)) throw DomainError("time interval must satisfy t1 >= t0");
  if (span == 0.0) return 0;
  return std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
}

}  // namespace perwave
