#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perwave/nonlinear_wave.hpp"
#include "perwave/radial_wave.hpp"

namespace perwave {

/// One nonlinear period map F = U(T, 0) on a fixed grid; F(0) = 0.
class PeriodMap {
 public:
  PeriodMap(const Potential& potential, const NonlinearitySpec& nl, const RadialGrid& grid,
            double T, double dt);

  /// Throws IntegrationError when the evolution leaves the finite range.
  State operator()(const State& state) const;
  State linear(const State& state) const;
  double period() const { return T_; }

 private:
  Potential potential_;
  NonlinearitySpec nl_;
  LinearPropagator linear_;
  double T_;
  double dt_;
};

State monodromy_map(const State& state, const Potential& potential, const NonlinearitySpec& nl,
                    double T, double dt);

struct FrechetResult {
  /// least-squares slope of log||F(sh) - L(sh)||_1 against log s (NaN when exact_linear)
  double slope = 0.0;
  std::vector<double> scales;
  std::vector<double> remainders;
  /// points that survived the noise filter
  int used = 0;
  bool exact_linear = false;
};

/// Scales must lie in (0, 1], at least 4 of them spanning two decades. Remainders
/// below the rounding floor are dropped; DomainError if fewer than 3 remain.
FrechetResult frechet_slope(const Potential& potential, const NonlinearitySpec& nl, double T,
                            double dt, const State& direction, const std::vector<double>& scales);

struct InstabilityRun {
  double delta = 0.0;
  double eta = 0.0;
  double rho = 0.0;
  std::vector<double> iterates;
  std::optional<int> escaped_at;
  /// Crossing time of eta in periods, interpolating ln||w_n||_1 linearly between the
  /// two iterates that straddle it (nullopt without escape).
  std::optional<double> escape_time;
  /// ||w_N||_1 >= C rho^N ||w_0||_1 held for every N up to escape
  bool growth_bound_held = false;
  bool certificate = false;
  std::string diagnostic;
};

struct CertificateOptions {
  /// constant C of the exponential-growth requirement
  double growth_constant = 0.5;
  int max_n = 100;
  unsigned threads = 1;
};

/// Iterates F from w_0 = delta * eigenstate / ||eigenstate||_1 until ||w_n||_1 > eta.
/// Runs for different deltas are independent and execute in parallel.
std::vector<InstabilityRun> instability_certificate(const Potential& potential,
                                                    const NonlinearitySpec& nl, double T, double dt,
                                                    const FloquetResult& dominant,
                                                    const std::vector<double>& deltas, double eta,
                                                    const CertificateOptions& options = {});

/// 10% of the amplitude A at which the nonlinear energy of A * phi / ||phi||_1 equals its
/// potential energy at t = 0.
double default_eta(const State& eigenstate, const Potential& potential, const NonlinearitySpec& nl);

struct SaturationReport {
  std::vector<double> times;
  std::vector<double> linear_norms;
  std::vector<double> nonlinear_norms;
  /// first sampled time where the two norms differ by 10% (nullopt: never)
  std::optional<double> divergence_time;
  /// slope of ln||.||_1 of the linear run over its last half
  double linear_rate = 0.0;
  /// slope of ||.||_1^(2r/(r+2)) of the nonlinear run
  double nonlinear_power_slope = 0.0;
  EnvelopeCheck envelope;
  double C2 = 0.0;
};

/// Linear and nonlinear evolutions from delta * eigenstate / ||eigenstate||_1 over
/// [0, horizon], sampled once per period.
SaturationReport saturation_contrast(const Potential& potential, const NonlinearitySpec& nl,
                                     double T, double dt, const State& eigenstate, double delta,
                                     double horizon);

}  // namespace perwave
