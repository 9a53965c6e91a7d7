#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace perwave {

/// Uniform radial grid r_i = (i + 1) * dr, i = 0..n-1, dr = r_max / n. The origin is
/// not stored (v = r u vanishes there) and the last node r = r_max is a Dirichlet wall.
struct RadialGrid {
  double r_max = 1.0;
  int n = 16;

  RadialGrid() = default;
  /// Throws ConfigError for n < 16 or r_max <= 0.
  RadialGrid(double r_max, int n);

  double dr() const { return r_max / n; }
  double r(int i) const { return (i + 1) * dr(); }
  /// Index of the last node with r_i <= radius (-1 if none).
  int last_node_within(double radius) const;
};

/// Cauchy pair on the grid: v = r u and w = dv/dt.
template <class Scalar>
struct BasicState {
  RadialGrid grid;
  std::vector<Scalar> v;
  std::vector<Scalar> w;

  BasicState() = default;
  explicit BasicState(const RadialGrid& g)
      : grid(g), v(static_cast<std::size_t>(g.n), Scalar{}), w(static_cast<std::size_t>(g.n), Scalar{}) {}
};

using State = BasicState<double>;
using ComplexState = BasicState<std::complex<double>>;

/// Squared norms of the R^3 fields u = v / r and du/dt (4 pi factors included).
struct EnergyNorms {
  double h_dot = 0.0;  // ||grad u||^2
  double l2_u = 0.0;   // ||u||^2
  double l2_w = 0.0;   // ||du/dt||^2

  double norm0_sq() const { return h_dot + l2_w; }
  double norm1_sq() const { return h_dot + l2_u + l2_w; }
  double norm0() const;
  double norm1() const;
};

template <class Scalar>
EnergyNorms energy_norms(const BasicState<Scalar>& s);

/// Inner product inducing ||.||_1 on real states.
double inner1(const State& a, const State& b);

State operator+(const State& a, const State& b);
State operator-(const State& a, const State& b);
State operator*(double c, const State& a);

/// Uniform double in [0, 1) from the top 53 bits, independent of the standard library.
double uniform01(std::mt19937_64& rng);

/// Smooth random data: a handful of Gaussian bumps in v and w centred in (0, radius),
/// enforced zero at the wall. Deterministic for a given seed.
State random_smooth_state(const RadialGrid& grid, double radius, std::uint64_t seed, int bumps = 6);

}  // namespace perwave
