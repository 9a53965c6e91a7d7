#pragma once

#include <cstdint>

namespace perwave {

/// |X'| <= C X^(1 - gamma) with X(0) = X0.
struct OdeBoundParams {
  double gamma = 0.5;
  double C = 0.0;
  double X0 = 0.0;

  /// Throws DomainError unless 0 < gamma < 1, C >= 0 and X0 >= 0.
  void validate() const;
};

/// (X0^gamma + C gamma t)^(1/gamma). Throws DomainError for t < 0.
double lemma3_bound(const OdeBoundParams& p, double t);

enum class DriveMode { Random, Plus, Minus };

struct FalsifyOptions {
  DriveMode mode = DriveMode::Random;
  /// Maximum number of constant pieces of c(t) per trial.
  int max_pieces = 16;
  /// RK4 substeps per unit time (at least 4 per piece).
  int steps_per_unit = 400;
  std::uint64_t seed = 7;
  unsigned threads = 1;
};

struct FalsifyResult {
  /// min over trials and sample times of (bound - Z) / max(1, bound), where Z = X + eps
  /// solves Z' = c(t) Z^(1 - gamma) from X0 + eps and the bound is taken for Z.
  double worst_margin = 0.0;
  double worst_time = 0.0;
  int worst_trial = -1;
};

/// Property harness for the comparison lemma: c(t) is piecewise constant on a random
/// partition of [0, horizon] with values uniform in [-C, C] (or fixed at +C / -C).
FalsifyResult lemma3_falsify(const OdeBoundParams& p, int trials, double horizon,
                             const FalsifyOptions& options = {});

/// Regularization shift applied to X in lemma3_falsify.
inline constexpr double kLemmaEpsilon = 1e-12;

struct Envelopes {
  double X_env = 0.0;
  /// bound for ||u_t|| + ||grad u||
  double norm_env = 0.0;
  /// bound for ||u(t)||_{L2}
  double l2_env = 0.0;
};

/// With g = r/(r+2), C = C2 g and B(t) = (X0^g + C t)^((r+2)/(2r)):
/// X_env = B^2, norm_env = 2 B, l2_env = f1_l2 + 2 |t| B. Throws DomainError for r
/// outside [2, 4).
Envelopes theorem2_envelope(double X0, double C2, double r, double t, double f1_l2 = 0.0);

/// Bound (Y0^(1/(r+2)) + B t / (r+2))^(r+2) for Y = 1 + X of the multi-term problem.
double multi_term_bound(double Y0, double B, double r, double t);

}  // namespace perwave
