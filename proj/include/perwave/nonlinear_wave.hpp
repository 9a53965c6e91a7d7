#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perwave/potential.hpp"
#include "perwave/radial_grid.hpp"
#include "perwave/wave_system.hpp"

namespace perwave {

/// Defocusing power |u|^r u with 2 <= r < 4, optionally with lower-order terms
/// q_j |u|^j u. `enabled = false` turns the equation linear (the exponent still sets
/// the envelope exponents).
struct NonlinearitySpec {
  double r = 2.0;
  std::optional<MultiTermSpec> multi;
  bool enabled = true;

  static NonlinearitySpec power(double r);
  static NonlinearitySpec linear(double r = 2.0);
  /// Throws InvalidSpec unless r is in [2, 4) and a multi spec has leading exponent r.
  void validate() const;
};

WaveSystem make_wave_system(const RadialGrid& grid, const Potential& potential,
                            const NonlinearitySpec& nl);

/// Components of X(t) and the right side of its rate identity, all with the 4 pi factor.
struct EnergyReport {
  double t = 0.0;
  double kinetic = 0.0;
  double gradient = 0.0;
  double potential_term = 0.0;
  double nonlinear_term = 0.0;
  double X = 0.0;
  /// 1/2 int dq/dt |u|^2 plus sum_j 1/(j+2) int dq_j/dt |u|^(j+2).
  double rhs_identity = 0.0;
  /// int q_j |u|^(j+2) / (j+2), one entry per multi term (in spec order).
  std::vector<double> multi_terms;
};

/// Evaluates EnergyReports on a fixed grid; the potentials are sampled once.
class EnergyMeter {
 public:
  EnergyMeter(const RadialGrid& grid, const Potential& potential, const NonlinearitySpec& nl);

  template <class Scalar>
  EnergyReport operator()(const BasicState<Scalar>& state, double t) const;

 private:
  RadialGrid grid_;
  GridPotential potential_;
  double r_;
  bool enabled_;
  std::vector<std::pair<int, GridPotential>> multi_;
};

EnergyReport energy_report(const State& state, const Potential& potential,
                           const NonlinearitySpec& nl, double t);
EnergyReport energy_report(const ComplexState& state, const Potential& potential,
                           const NonlinearitySpec& nl, double t);

/// One explicit Verlet step of v_tt = v_rr - q v - |v/r|^r v. Throws ConfigError on a
/// CFL violation and IntegrationError when the result is not finite.
State step_nonlinear(const State& state, const Potential& potential, const NonlinearitySpec& nl,
                     double t, double dt);

struct EvolveOptions {
  /// Checkpoint spacing in steps of size dt.
  int report_every = 1;
  bool keep_states = false;
  /// Substep (dt / 2^m) whenever max|v/r|^r dt^2 exceeds guard_threshold.
  bool amplitude_guard = true;
  double guard_threshold = 0.1;
};

template <class Scalar>
struct BasicTrajectory {
  std::vector<EnergyReport> reports;
  std::vector<EnergyNorms> norms;
  /// Checkpoint states, filled when keep_states is set.
  std::vector<BasicState<Scalar>> states;
  /// Final state, or the last good checkpoint after an abort.
  BasicState<Scalar> last;
  double t_last = 0.0;
  bool aborted = false;
  std::string diagnostic;
  /// Steps that the amplitude guard split into substeps.
  int refined_steps = 0;
};

using Trajectory = BasicTrajectory<double>;
using ComplexTrajectory = BasicTrajectory<std::complex<double>>;

/// Nonlinear evolution on [t0, t1] with a checkpoint (report, norms) at t0, every
/// report_every steps, and at t1. A non-finite state stops the run with `aborted` set.
Trajectory evolve(const State& state, const Potential& potential, const NonlinearitySpec& nl,
                  double t0, double t1, double dt, const EvolveOptions& options = {});
ComplexTrajectory evolve(const ComplexState& state, const Potential& potential,
                         const NonlinearitySpec& nl, double t0, double t1, double dt,
                         const EvolveOptions& options = {});

/// Multi-term equation with leading exponent multi.leading_exponent; reports carry the
/// per-term energies.
Trajectory evolve_multi(const State& state, const Potential& potential, const MultiTermSpec& multi,
                        double t0, double t1, double dt, const EvolveOptions& options = {});

/// C2 = 1/2 sup|dq/dt| |B|^(r/(r+2)) (r+2)^(2/(r+2)), B the ball carrying the time-dependent
/// part of q. With a grid, |B| is the larger of the exact volume and its trapezoid
/// counterpart, so the bound also holds for the discrete energies.
double energy_rate_constant(const Potential& potential, const NonlinearitySpec& nl,
                            const std::optional<RadialGrid>& grid = std::nullopt);

/// Smallest C for which X(t) <= (X0^g + C g (t - t0))^(1/g), g = r/(r+2), on the reports.
double fitted_rate_constant(const std::vector<EnergyReport>& reports, double r);

/// B_r = sum over the terms (q as j = 0 with weight 1/2, and each q_j with 1/(j+2)) of
/// sup|dq_j/dt| |B_j|^((r-j)/(r+2)) (r+2)^((j+2)/(r+2)).
double multi_rate_constant(const Potential& potential, const MultiTermSpec& multi,
                           const std::optional<RadialGrid>& grid = std::nullopt);

/// max over interior checkpoints of |(X_{k+1} - X_{k-1}) / (t_{k+1} - t_{k-1}) - rhs_k|.
double identity_defect(const std::vector<EnergyReport>& reports);

struct EnvelopeCheck {
  int checkpoints = 0;
  int violations = 0;
  /// max over checkpoints of value / envelope for X, ||u_t|| + ||grad u||, ||u||.
  double worst_X_ratio = 0.0;
  double worst_norm_ratio = 0.0;
  double worst_l2_ratio = 0.0;
};

/// Checks a trajectory against the three polynomial envelopes with constant C2.
EnvelopeCheck check_envelopes(const Trajectory& trajectory, double C2, double r);

struct PicardResult {
  State state;
  /// max over the time steps of ||u_{n+1} - u_n||_1, one entry per iteration.
  std::vector<double> history;
  bool diverged = false;
};

/// tau = c (1 + ||data||_1)^(-gamma); gamma < 0 selects gamma = r.
double picard_default_tau(const State& data, double r, double c = 0.5, double gamma = -1.0);

/// Iterates u_{n+1} = linear evolution forced by the nonlinearity of u_n, from u_0 = 0,
/// on [0, tau] with the Verlet scheme. The fixed point is the explicit nonlinear
/// trajectory. Stops early with `diverged` when the history grows three times in a row.
PicardResult picard_oracle(const State& data, const Potential& potential,
                           const NonlinearitySpec& nl, double tau, double dt, int iterations);

}  // namespace perwave
