#include "perwave/radial_grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "perwave/errors.hpp"

namespace perwave {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

void require_same_grid(const State& a, const State& b) {
  if (a.grid.n != b.grid.n || a.grid.r_max != b.grid.r_max) {
    throw ConfigError("states live on different grids");
  }
}

}  // namespace

RadialGrid::RadialGrid(double r_max_, int n_) : r_max(r_max_), n(n_) {
  if (!(r_max > 0.0)) throw ConfigError("grid r_max must be positive");
  if (n < 16) throw ConfigError("grid needs at least 16 nodes, got " + std::to_string(n));
}

int RadialGrid::last_node_within(double radius) const {
  const int i = static_cast<int>(std::floor(radius / dr() + 1e-9)) - 1;
  return std::min(i, n - 1);
}

double EnergyNorms::norm0() const { return std::sqrt(norm0_sq()); }
double EnergyNorms::norm1() const { return std::sqrt(norm1_sq()); }

template <class Scalar>
EnergyNorms energy_norms(const BasicState<Scalar>& s) {
  const double dr = s.grid.dr();
  EnergyNorms e;
  Scalar prev{};
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    const double d = std::abs(s.v[i] - prev);
    e.h_dot += d * d;
    e.l2_u += std::norm(s.v[i]);
    e.l2_w += std::norm(s.w[i]);
    prev = s.v[i];
  }
  e.h_dot *= kFourPi / dr;
  e.l2_u *= kFourPi * dr;
  e.l2_w *= kFourPi * dr;
  return e;
}

template EnergyNorms energy_norms(const BasicState<double>&);
template EnergyNorms energy_norms(const BasicState<std::complex<double>>&);

double inner1(const State& a, const State& b) {
  require_same_grid(a, b);
  const double dr = a.grid.dr();
  double grad = 0.0, l2 = 0.0;
  double pa = 0.0, pb = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    grad += (a.v[i] - pa) * (b.v[i] - pb);
    l2 += a.v[i] * b.v[i] + a.w[i] * b.w[i];
    pa = a.v[i];
    pb = b.v[i];
  }
  return kFourPi * (grad / dr + l2 * dr);
}

State operator+(const State& a, const State& b) {
  require_same_grid(a, b);
  State c(a.grid);
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    c.v[i] = a.v[i] + b.v[i];
    c.w[i] = a.w[i] + b.w[i];
  }
  return c;
}

State operator-(const State& a, const State& b) {
  require_same_grid(a, b);
  State c(a.grid);
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    c.v[i] = a.v[i] - b.v[i];
    c.w[i] = a.w[i] - b.w[i];
  }
  return c;
}

State operator*(double k, const State& a) {
  State c(a.grid);
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    c.v[i] = k * a.v[i];
    c.w[i] = k * a.w[i];
  }
  return c;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

State random_smooth_state(const RadialGrid& grid, double radius, std::uint64_t seed, int bumps) {
  std::mt19937_64 rng(seed);
  State s(grid);
  radius = std::min(radius, grid.r_max);
  for (auto* field : {&s.v, &s.w}) {
    for (int b = 0; b < bumps; ++b) {
      const double centre = radius * (0.1 + 0.8 * uniform01(rng));
      const double width = radius * (0.05 + 0.1 * uniform01(rng));
      const double amp = 2.0 * uniform01(rng) - 1.0;
      for (int i = 0; i < grid.n; ++i) {
        const double x = (grid.r(i) - centre) / width;
        (*field)[static_cast<std::size_t>(i)] += amp * std::exp(-x * x);
      }
    }
    // taper so the profile vanishes at r = 0 and carries no weight at the wall
    for (int i = 0; i < grid.n; ++i) {
      const double r = grid.r(i);
      (*field)[static_cast<std::size_t>(i)] *= (1.0 - std::exp(-(r * r) / (0.01 * radius * radius)));
    }
    field->back() = 0.0;
  }
  return s;
}

}  // namespace perwave
