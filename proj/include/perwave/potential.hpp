#pragma once

#include <memory>
#include <vector>

namespace perwave {

/// C-infinity transition from 0 (x <= 0) to 1 (x >= 1), built from exp(-1/x).
double smooth_step(double x);

/// Periodic scalar function of time. Three forms are supported: a constant, a single
/// cosine harmonic mean + amplitude*cos(2*pi*m*t/T + phase), and tabulated samples that
/// are interpolated by a periodic cubic spline.
class TimeProfile {
 public:
  enum class Kind { Constant, Harmonic, Sampled };

  static TimeProfile constant(double value);
  static TimeProfile harmonic(double period, double mean, double amplitude, int harmonic = 1,
                              double phase = 0.0);
  /// Samples at t_k = k*T/(N-1), k = 0..N-1, so the last sample sits at t = T and should
  /// repeat the first one. Interpolation uses samples 0..N-2 and wraps; any mismatch of
  /// the last sample is reported by endpoint_defect() rather than silently used.
  static TimeProfile sampled(double period, std::vector<double> samples);

  Kind kind() const { return kind_; }
  double value(double t) const;
  double derivative(double t) const;
  double max_abs_derivative() const;
  double min_value() const;
  double max_abs_value() const;
  /// 0 for constant profiles.
  double period() const { return period_; }
  bool is_static() const;
  double endpoint_defect() const;

  double mean() const { return mean_; }
  double amplitude() const { return amplitude_; }
  int harmonic_number() const { return harmonic_; }
  double phase() const { return phase_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  struct Spline;
  TimeProfile() = default;

  Kind kind_ = Kind::Constant;
  double period_ = 0.0;
  double mean_ = 0.0;
  double amplitude_ = 0.0;
  int harmonic_ = 1;
  double phase_ = 0.0;
  std::vector<double> samples_;
  std::shared_ptr<const Spline> spline_;
};

/// Nonnegative radial profile with compact support [0, support_radius()].
class SpaceProfile {
 public:
  enum class Kind { Zero, Bump, Plateau, Shell };

  static SpaceProfile zero();
  /// height * exp(1 - 1/(1 - (r/radius)^2)) inside the ball.
  static SpaceProfile bump(double height, double radius);
  /// height on [0, radius - ramp], smooth monotone decay to 0 at r = radius.
  static SpaceProfile plateau(double height, double radius, double ramp);
  /// Supported in [inner, outer]; equals height on [inner + ramp, outer - ramp].
  static SpaceProfile shell(double height, double inner, double outer, double ramp);

  Kind kind() const { return kind_; }
  double value(double r) const;
  double support_radius() const;
  double max_value() const { return kind_ == Kind::Zero ? 0.0 : height_; }

  double height() const { return height_; }
  double inner() const { return inner_; }
  double outer() const { return outer_; }
  double ramp() const { return ramp_; }

 private:
  SpaceProfile() = default;

  Kind kind_ = Kind::Zero;
  double height_ = 0.0;
  double inner_ = 0.0;
  double outer_ = 0.0;
  double ramp_ = 0.0;
};

struct PotentialTerm {
  TimeProfile time;
  SpaceProfile space;
};

/// q(t, r) = sum_j a_j(t) s_j(r): a finite sum of separable, nonnegative, T-periodic
/// terms with compact radial support. Immutable after construction.
class Potential {
 public:
  /// Throws InvalidSpec when period <= 0, a term is negative somewhere, or a term's
  /// time profile has a period different from `period`.
  Potential(double period, std::vector<PotentialTerm> terms);

  static Potential zero(double period = 1.0);
  static Potential separable(double period, TimeProfile time, SpaceProfile space);

  double period() const { return period_; }
  double support_radius() const;
  bool separable() const { return terms_.size() == 1; }
  bool is_static() const;
  bool is_zero() const;

  double value(double t, double r) const;
  double time_derivative(double t, double r) const;
  /// Upper bound for sup |dq/dt| (exact for a single term).
  double max_abs_time_derivative() const;

  const std::vector<PotentialTerm>& terms() const { return terms_; }

 private:
  double period_;
  std::vector<PotentialTerm> terms_;
};

/// q(t, r); throws DomainError for r < 0.
double eval_potential(const Potential& spec, double t, double r);

/// max |q(t + T, r) - q(t, r)| over `samples` times and radii, combined with the endpoint
/// mismatch of tabulated profiles.
double periodicity_defect(const Potential& spec, int samples);

/// Barrier construction b^eps(r) + q(t) chi^delta(r) confining waves to the ball r < L.
struct BarrierSpec {
  double inner_radius = 1.0;
  double epsilon = 0.1;
  /// Non-positive selects the default 0.05 * inner_radius.
  double delta = -1.0;
  double period = 1.0;
  TimeProfile hill_profile = TimeProfile::constant(0.0);

  double effective_delta() const { return delta > 0.0 ? delta : 0.05 * inner_radius; }
};

/// Throws InvalidSpec when epsilon >= 1/2, delta >= L, or a parameter is non-positive.
/// The resulting potential has support radius L + 1.
Potential build_barrier(const BarrierSpec& spec);

struct MultiTerm {
  int exponent;
  Potential potential;
};

/// Coefficients q_j of the lower-order terms q_j |u|^j u, j < leading_exponent.
struct MultiTermSpec {
  int leading_exponent = 2;
  std::vector<MultiTerm> terms;

  /// Throws InvalidSpec unless leading_exponent is 2 or 3 and exponents are distinct
  /// and lie in [0, leading_exponent - 1].
  void validate() const;
};

}  // namespace perwave
