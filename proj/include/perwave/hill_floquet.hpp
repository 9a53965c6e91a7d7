#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "perwave/potential.hpp"

namespace perwave {

/// y'' + (omega_sq + forcing(t)) y = 0 with forcing periodic of period `period`.
/// Each radial Dirichlet mode sin(k pi r / L) of the forced ball obeys one of these.
struct HillProblem {
  double omega_sq = 0.0;
  std::function<double(double)> forcing = [](double) { return 0.0; };
  double period = 1.0;
};

/// Mathieu equation y'' + (a - 2p cos 2t) y = 0 written as a Hill problem with a
/// nonnegative forcing 2p(1 - cos 2t) and omega_sq = a - 2p; period pi.
HillProblem mathieu_problem(double a, double p);

/// Fundamental matrix over one period, mapping (y(0), y'(0)) to (y(T), y'(T)).
struct MonodromyMatrix2 {
  std::array<double, 4> entries{1.0, 0.0, 0.0, 1.0};  // row-major
  int integrator_steps = 0;
  /// det M - 1; zero for an exact monodromy (the coefficient matrix is traceless).
  double est_error = 0.0;

  double operator()(int row, int col) const { return entries[2 * row + col]; }
  double trace() const { return entries[0] + entries[3]; }
  double det() const { return entries[0] * entries[3] - entries[1] * entries[2]; }
};

struct FloquetPair {
  std::complex<double> mu1;
  std::complex<double> mu2;
  double trace = 2.0;
  bool unstable = false;

  double max_abs() const { return std::max(std::abs(mu1), std::abs(mu2)); }
};

/// Classical RK4 with `steps` fixed steps over [0, T]. Throws DomainError for
/// steps < 16 and IntegrationError when the forcing or the solution stops being finite.
MonodromyMatrix2 monodromy(const HillProblem& problem, int steps);

/// Roots of lambda^2 - tr(M) lambda + 1. Throws InconsistentMatrix when |det M - 1|
/// exceeds det_tolerance * max(1, max|M_ij|^2).
FloquetPair multipliers(const MonodromyMatrix2& m, double det_tolerance = 1e-6);

/// Real eigenvector (y(0), y'(0)) of M for the dominant multiplier of an unstable
/// problem, normalized to unit Euclidean length.
std::array<double, 2> dominant_floquet_vector(const MonodromyMatrix2& m, const FloquetPair& pair);

struct TonguePoint {
  double omega_sq;
  double trace;
  double max_multiplier;
  bool unstable;
  /// |det M - 1| of the computed monodromy
  double det_defect;
};

/// Scans omega_sq over n equispaced points of [lo, hi]. Results keep grid order
/// regardless of `threads`.
std::vector<TonguePoint> tongue_scan(const std::function<double(double)>& forcing, double period,
                                     std::pair<double, double> omega_sq_range, int n,
                                     int steps = 2000, unsigned threads = 1);

/// Contiguous unstable runs of a scan, as [first unstable omega_sq, last unstable omega_sq].
std::vector<std::pair<double, double>> instability_intervals(const std::vector<TonguePoint>& scan);

struct UnstableMode {
  int k;
  double omega_sq;
  FloquetPair multipliers;
  MonodromyMatrix2 monodromy;
  /// Initial (y, y') of the growing Floquet solution.
  std::array<double, 2> floquet_vector;
};

/// Smallest k <= k_max whose radial Dirichlet mode (omega_sq = (k pi / L)^2) is
/// parametrically unstable under the barrier's hill profile; nullopt if none is.
std::optional<UnstableMode> pick_unstable_mode(const BarrierSpec& spec, int k_max,
                                               int steps = 4000);

}  // namespace perwave
