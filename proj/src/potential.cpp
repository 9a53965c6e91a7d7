#include "perwave/potential.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "perwave/errors.hpp"

namespace perwave {

namespace {

double transition_weight(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

double wrap(double t, double period) {
  double s = t - period * std::floor(t / period);
  if (s < 0.0) s = 0.0;
  if (s > period) s = period;
  return s;
}

}  // namespace

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = transition_weight(x);
  const double b = transition_weight(1.0 - x);
  return a / (a + b);
}

// ---------------------------------------------------------------------------
// TimeProfile

struct TimeProfile::Spline {
  std::vector<double> knots;
  std::vector<double> values;
  gsl_spline* handle = nullptr;

  Spline(double period, const std::vector<double>& samples) {
    const std::size_t intervals = samples.size() - 1;
    knots.resize(intervals + 1);
    values.resize(intervals + 1);
    for (std::size_t k = 0; k <= intervals; ++k) {
      knots[k] = period * static_cast<double>(k) / static_cast<double>(intervals);
      values[k] = samples[k];
    }
    values[intervals] = samples[0];
    handle = gsl_spline_alloc(gsl_interp_cspline_periodic, knots.size());
    if (handle == nullptr) throw InvalidSpec("could not allocate periodic spline");
    gsl_spline_init(handle, knots.data(), values.data(), knots.size());
  }
  ~Spline() { gsl_spline_free(handle); }
  Spline(const Spline&) = delete;
  Spline& operator=(const Spline&) = delete;

  // gsl_spline_eval with a null accelerator does not mutate the spline.
  double value(double s) const { return gsl_spline_eval(handle, s, nullptr); }
  double derivative(double s) const { return gsl_spline_eval_deriv(handle, s, nullptr); }
};

TimeProfile TimeProfile::constant(double value) {
  TimeProfile p;
  p.kind_ = Kind::Constant;
  p.mean_ = value;
  return p;
}

TimeProfile TimeProfile::harmonic(double period, double mean, double amplitude, int harmonic,
                                  double phase) {
  if (!(period > 0.0)) throw InvalidSpec("harmonic time profile needs a positive period");
  if (harmonic < 1) throw InvalidSpec("harmonic number must be >= 1");
  TimeProfile p;
  p.kind_ = Kind::Harmonic;
  p.period_ = period;
  p.mean_ = mean;
  p.amplitude_ = amplitude;
  p.harmonic_ = harmonic;
  p.phase_ = phase;
  return p;
}

TimeProfile TimeProfile::sampled(double period, std::vector<double> samples) {
  if (!(period > 0.0)) throw InvalidSpec("sampled time profile needs a positive period");
  if (samples.size() < 3) throw InvalidSpec("sampled time profile needs at least 3 samples");
  for (double y : samples) {
    if (!std::isfinite(y)) throw InvalidSpec("sampled time profile contains non-finite values");
  }
  gsl_set_error_handler_off();
  TimeProfile p;
  p.kind_ = Kind::Sampled;
  p.period_ = period;
  p.samples_ = std::move(samples);
  p.spline_ = std::make_shared<const Spline>(period, p.samples_);
  return p;
}

bool TimeProfile::is_static() const {
  switch (kind_) {
    case Kind::Constant:
      return true;
    case Kind::Harmonic:
      return amplitude_ == 0.0;
    case Kind::Sampled:
      return std::all_of(samples_.begin(), samples_.end() - 1,
                         [&](double y) { return y == samples_.front(); });
  }
  return true;
}

double TimeProfile::value(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return mean_;
    case Kind::Harmonic:
      return mean_ + amplitude_ * std::cos(2.0 * std::numbers::pi * harmonic_ * t / period_ + phase_);
    case Kind::Sampled:
      return spline_->value(wrap(t, period_));
  }
  return 0.0;
}

double TimeProfile::derivative(double t) const {
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::Harmonic: {
      const double omega = 2.0 * std::numbers::pi * harmonic_ / period_;
      return -amplitude_ * omega * std::sin(omega * t + phase_);
    }
    case Kind::Sampled:
      return spline_->derivative(wrap(t, period_));
  }
  return 0.0;
}

double TimeProfile::max_abs_derivative() const {
  switch (kind_) {
    case Kind::Constant:
      return 0.0;
    case Kind::Harmonic:
      return std::abs(amplitude_) * 2.0 * std::numbers::pi * harmonic_ / period_;
    case Kind::Sampled: {
      // The spline derivative is quadratic on each interval, so three evaluations per
      // interval determine it and its extremum exactly.
      const auto& knots = spline_->knots;
      double best = 0.0;
      for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double h = knots[k + 1] - knots[k];
        const double d0 = spline_->derivative(knots[k]);
        const double dm = spline_->derivative(knots[k] + 0.5 * h);
        const double d1 = spline_->derivative(knots[k + 1]);
        best = std::max({best, std::abs(d0), std::abs(dm), std::abs(d1)});
        // d(s) = d0 + b s + a s^2 on s in [0, 1]
        const double a = 2.0 * (d1 - 2.0 * dm + d0);
        const double b = d1 - d0 - a;
        if (a != 0.0) {
          const double s = -b / (2.0 * a);
          if (s > 0.0 && s < 1.0) best = std::max(best, std::abs(d0 + b * s + a * s * s));
        }
      }
      return best;
    }
  }
  return 0.0;
}

double TimeProfile::min_value() const {
  switch (kind_) {
    case Kind::Constant:
      return mean_;
    case Kind::Harmonic:
      return mean_ - std::abs(amplitude_);
    case Kind::Sampled: {
      double lo = samples_.front();
      const auto& knots = spline_->knots;
      for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        for (int j = 0; j < 16; ++j) {
          const double s = knots[k] + (knots[k + 1] - knots[k]) * j / 16.0;
          lo = std::min(lo, spline_->value(s));
        }
      }
      return lo;
    }
  }
  return 0.0;
}

double TimeProfile::max_abs_value() const {
  switch (kind_) {
    case Kind::Constant:
      return std::abs(mean_);
    case Kind::Harmonic:
      return std::abs(mean_) + std::abs(amplitude_);
    case Kind::Sampled: {
      double hi = 0.0;
      const auto& knots = spline_->knots;
      for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        for (int j = 0; j < 16; ++j) {
          const double s = knots[k] + (knots[k + 1] - knots[k]) * j / 16.0;
          hi = std::max(hi, std::abs(spline_->value(s)));
        }
      }
      return hi;
    }
  }
  return 0.0;
}

double TimeProfile::endpoint_defect() const {
  if (kind_ != Kind::Sampled) return 0.0;
  return std::abs(samples_.back() - samples_.front());
}

// ---------------------------------------------------------------------------
// SpaceProfile

SpaceProfile SpaceProfile::zero() { return SpaceProfile{}; }

SpaceProfile SpaceProfile::bump(double height, double radius) {
  if (!(height >= 0.0) || !(radius > 0.0)) throw InvalidSpec("bump needs height >= 0 and radius > 0");
  SpaceProfile s;
  s.kind_ = Kind::Bump;
  s.height_ = height;
  s.outer_ = radius;
  return s;
}

SpaceProfile SpaceProfile::plateau(double height, double radius, double ramp) {
  if (!(height >= 0.0) || !(radius > 0.0) || !(ramp > 0.0) || ramp > radius) {
    throw InvalidSpec("plateau needs height >= 0 and 0 < ramp <= radius");
  }
  SpaceProfile s;
  s.kind_ = Kind::Plateau;
  s.height_ = height;
  s.outer_ = radius;
  s.ramp_ = ramp;
  return s;
}

SpaceProfile SpaceProfile::shell(double height, double inner, double outer, double ramp) {
  if (!(height >= 0.0) || !(inner >= 0.0) || !(outer > inner) || !(ramp > 0.0) ||
      2.0 * ramp > outer - inner) {
    throw InvalidSpec("shell needs height >= 0, inner < outer and 0 < 2*ramp <= outer - inner");
  }
  SpaceProfile s;
  s.kind_ = Kind::Shell;
  s.height_ = height;
  s.inner_ = inner;
  s.outer_ = outer;
  s.ramp_ = ramp;
  return s;
}

double SpaceProfile::support_radius() const { return kind_ == Kind::Zero ? 0.0 : outer_; }

double SpaceProfile::value(double r) const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Bump: {
      if (r >= outer_) return 0.0;
      const double x = r / outer_;
      return height_ * std::exp(1.0 - 1.0 / (1.0 - x * x));
    }
    case Kind::Plateau: {
      if (r >= outer_) return 0.0;
      return height_ * (1.0 - smooth_step((r - (outer_ - ramp_)) / ramp_));
    }
    case Kind::Shell: {
      if (r <= inner_ || r >= outer_) return 0.0;
      if (r < inner_ + ramp_) return height_ * smooth_step((r - inner_) / ramp_);
      if (r > outer_ - ramp_) return height_ * smooth_step((outer_ - r) / ramp_);
      return height_;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Potential

Potential::Potential(double period, std::vector<PotentialTerm> terms)
    : period_(period), terms_(std::move(terms)) {
  if (!(period_ > 0.0)) throw InvalidSpec("potential period must be positive");
  for (const auto& term : terms_) {
    const auto& tp = term.time;
    if (tp.kind() != TimeProfile::Kind::Constant &&
        std::abs(tp.period() - period_) > 1e-12 * period_) {
      throw InvalidSpec("time profile period " + std::to_string(tp.period()) +
                        " differs from potential period " + std::to_string(period_));
    }
    if (term.space.kind() != SpaceProfile::Kind::Zero && tp.min_value() < -1e-12) {
      throw InvalidSpec("potential term takes negative values (min of time profile " +
                        std::to_string(tp.min_value()) + ")");
    }
  }
}

Potential Potential::zero(double period) { return Potential(period, {}); }

Potential Potential::separable(double period, TimeProfile time, SpaceProfile space) {
  return Potential(period, {PotentialTerm{std::move(time), std::move(space)}});
}

double Potential::support_radius() const {
  double rho = 0.0;
  for (const auto& term : terms_) rho = std::max(rho, term.space.support_radius());
  return rho;
}

bool Potential::is_static() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const PotentialTerm& term) {
    return term.time.is_static() || term.space.kind() == SpaceProfile::Kind::Zero;
  });
}

bool Potential::is_zero() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const PotentialTerm& term) {
    return term.space.max_value() == 0.0 ||
           (term.time.kind() == TimeProfile::Kind::Constant && term.time.mean() == 0.0);
  });
}

double Potential::value(double t, double r) const {
  double q = 0.0;
  for (const auto& term : terms_) {
    const double s = term.space.value(r);
    if (s != 0.0) q += term.time.value(t) * s;
  }
  return q;
}

double Potential::time_derivative(double t, double r) const {
  double dq = 0.0;
  for (const auto& term : terms_) {
    const double s = term.space.value(r);
    if (s != 0.0) dq += term.time.derivative(t) * s;
  }
  return dq;
}

double Potential::max_abs_time_derivative() const {
  double bound = 0.0;
  for (const auto& term : terms_) bound += term.time.max_abs_derivative() * term.space.max_value();
  return bound;
}

double eval_potential(const Potential& spec, double t, double r) {
  if (!(r >= 0.0)) throw DomainError("eval_potential: radius must be >= 0");
  return spec.value(t, r);
}

double periodicity_defect(const Potential& spec, int samples) {
  samples = std::max(samples, 2);
  const double period = spec.period();
  const double rho = std::max(spec.support_radius(), 1e-12);
  double defect = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = period * k / samples;
    for (int j = 0; j < samples; ++j) {
      const double r = rho * j / (samples - 1);
      defect = std::max(defect, std::abs(spec.value(t + period, r) - spec.value(t, r)));
    }
  }
  for (const auto& term : spec.terms()) {
    defect = std::max(defect, term.time.endpoint_defect() * term.space.max_value());
  }
  return defect;
}

Potential build_barrier(const BarrierSpec& spec) {
  const double L = spec.inner_radius;
  const double eps = spec.epsilon;
  const double delta = spec.effective_delta();
  if (!(L > 0.0)) throw InvalidSpec("barrier inner radius must be positive");
  if (!(eps > 0.0) || eps >= 0.5) throw InvalidSpec("barrier epsilon must lie in (0, 1/2)");
  if (!(delta > 0.0) || delta >= L) throw InvalidSpec("barrier delta must lie in (0, L)");
  std::vector<PotentialTerm> terms;
  terms.push_back({TimeProfile::constant(1.0), SpaceProfile::shell(1.0 / eps, L, L + 1.0, eps)});
  terms.push_back({spec.hill_profile, SpaceProfile::plateau(1.0, L, delta)});
  return Potential(spec.period, std::move(terms));
}

void MultiTermSpec::validate() const {
  if (leading_exponent != 2 && leading_exponent != 3) {
    throw InvalidSpec("multi-term leading exponent must be 2 or 3");
  }
  std::set<int> seen;
  for (const auto& term : terms) {
    if (term.exponent < 0 || term.exponent >= leading_exponent) {
      throw InvalidSpec("multi-term exponent " + std::to_string(term.exponent) +
                        " outside [0, r-1]");
    }
    if (!seen.insert(term.exponent).second) {
      throw InvalidSpec("multi-term exponents must be distinct");
    }
  }
}

}  // namespace perwave
