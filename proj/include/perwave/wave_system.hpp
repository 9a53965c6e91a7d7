#pragma once

#include <optional>
#include <span>
#include <vector>

#include "perwave/potential.hpp"
#include "perwave/radial_grid.hpp"

namespace perwave {

/// A potential sampled on the grid nodes: the radial factors are evaluated once,
/// so q(t, r_i) costs one time-profile evaluation per term.
class GridPotential {
 public:
  GridPotential(const Potential& potential, const RadialGrid& grid);

  void sample(double t, std::span<double> out) const;
  void sample_time_derivative(double t, std::span<double> out) const;
  bool is_zero() const { return zero_; }
  bool is_static() const { return dynamic_.empty(); }

 private:
  struct Term {
    TimeProfile time;
    std::vector<double> space;
  };
  std::vector<double> static_part_;
  std::vector<Term> dynamic_;
  bool zero_ = true;
};

/// Coefficient q_j(t, r) of a lower-order power term q_j |u|^j u.
struct PowerTerm {
  int exponent;
  Potential coefficient;
};

/// The semi-discrete radial system
///   v_tt = D2 v - q(t, r) v - |v/r|^p v - sum_j q_j(t, r) |v/r|^j v,
/// with v = 0 at r = 0 and at the wall. D2 is the three-point Laplacian, which makes
/// the system the Euler-Lagrange equations of the trapezoid-rule energy.
/// Immutable after construction; scratch space is thread-local.
class WaveSystem {
 public:
  WaveSystem(const RadialGrid& grid, const Potential& potential,
             std::optional<double> exponent = std::nullopt, std::vector<PowerTerm> extra = {});

  const RadialGrid& grid() const { return grid_; }
  std::optional<double> exponent() const { return exponent_; }
  bool has_nonlinearity() const { return exponent_.has_value() || !extra_.empty(); }
  const GridPotential& potential() const { return potential_; }

  template <class Scalar>
  void acceleration(double t, std::span<const Scalar> v, std::span<Scalar> a) const;

  /// Linear part D2 v - q v only.
  template <class Scalar>
  void linear_acceleration(double t, std::span<const Scalar> v, std::span<Scalar> a) const;

  /// Adds the nonlinear force -|v/r|^p v - sum_j q_j |v/r|^j v to `a`.
  template <class Scalar>
  void add_nonlinear_force(double t, std::span<const Scalar> v, std::span<Scalar> a) const;

  /// One velocity-Verlet (kick-drift-kick) step of size h starting at time t.
  /// `acc` must hold the acceleration at (state.v, t) on entry and holds the one at the
  /// new position on exit, so consecutive steps evaluate the force once each.
  template <class Scalar>
  void verlet_step(BasicState<Scalar>& state, std::vector<Scalar>& acc, double t, double h) const;

  /// max_i |v_i / r_i|^p, the stiffness of the leading nonlinear term (0 when linear).
  template <class Scalar>
  double nonlinear_stiffness(std::span<const Scalar> v) const;

 private:
  struct Extra {
    int exponent;
    GridPotential coefficient;
  };
  RadialGrid grid_;
  GridPotential potential_;
  std::optional<double> exponent_;
  std::vector<Extra> extra_;
  std::vector<double> inv_r_;
};

/// |x|^p for the exponents used here, with exact fast paths for small integers.
double abs_pow(double x, double p);

/// Throws ConfigError("CFL violated ...") when dt > dr or dt <= 0.
void check_cfl(const RadialGrid& grid, double dt);

/// ceil(span / dt), ignoring a relative excess of 1e-9 so that span = k * dt gives k.
int step_count(double span, double dt);

/// Advances `state` from t0 to t1 with step_count(t1 - t0, dt) Verlet steps; the last
/// step is shortened to land exactly on t1. `after_step(k, t)` runs after step k >= 1.
template <class Scalar, class Fn>
void march(const WaveSystem& system, BasicState<Scalar>& state, double t0, double t1, double dt,
           Fn&& after_step) {
  const int steps = step_count(t1 - t0, dt);
  if (steps == 0) return;
  std::vector<Scalar> acc(state.v.size());
  system.acceleration<Scalar>(t0, state.v, acc);
  double t = t0;
  for (int k = 1; k <= steps; ++k) {
    const double h = k == steps ? t1 - t : dt;
    system.verlet_step(state, acc, t, h);
    t = k == steps ? t1 : t0 + k * dt;
    after_step(k, t);
  }
}

template <class Scalar>
void march(const WaveSystem& system, BasicState<Scalar>& state, double t0, double t1, double dt) {
  march(system, state, t0, t1, dt, [](int, double) {});
}

}  // namespace perwave
