#include "perwave/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "perwave/errors.hpp"
#include "perwave/parallel.hpp"
#include "perwave/radial_grid.hpp"

namespace perwave {

void OdeBoundParams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in (0, 1)");
  if (!(C >= 0.0)) throw DomainError("C must be nonnegative");
  if (!(X0 >= 0.0)) throw DomainError("X0 must be nonnegative");
}

double lemma3_bound(const OdeBoundParams& p, double t) {
  p.validate();
  if (!(t >= 0.0)) throw DomainError("lemma3_bound needs t >= 0");
  return std::pow(std::pow(p.X0, p.gamma) + p.C * p.gamma * t, 1.0 / p.gamma);
}

namespace {

struct Piece {
  double t0, t1, c;
};

std::vector<Piece> draw_drive(const OdeBoundParams& p, double horizon, const FalsifyOptions& o,
                              std::mt19937_64& rng) {
  if (o.mode != DriveMode::Random) {
    return {{0.0, horizon, o.mode == DriveMode::Plus ? p.C : -p.C}};
  }
  const int pieces = 1 + static_cast<int>(uniform01(rng) * o.max_pieces);
  std::vector<double> cuts{0.0, horizon};
  for (int i = 1; i < pieces; ++i) cuts.push_back(horizon * uniform01(rng));
  std::sort(cuts.begin(), cuts.end());
  std::vector<Piece> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) out.push_back({cuts[i], cuts[i + 1], p.C * (2.0 * uniform01(rng) - 1.0)});
  }
  return out;
}

struct TrialOutcome {
  double margin = 0.0;
  double time = 0.0;
};

TrialOutcome run_trial(const OdeBoundParams& p, double horizon, const FalsifyOptions& o,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  OdeBoundParams shifted = p;
  shifted.X0 = p.X0 + kLemmaEpsilon;
  const auto pieces = draw_drive(p, horizon, o, rng);
  const double e = 1.0 - p.gamma;
  auto f = [&](double c, double z) { return c * std::pow(std::max(z, 0.0), e); };

  double z = shifted.X0;
  TrialOutcome worst{lemma3_bound(shifted, 0.0) - z, 0.0};
  worst.margin /= std::max(1.0, lemma3_bound(shifted, 0.0));
  for (const auto& piece : pieces) {
    const int m = std::max(4, static_cast<int>(std::ceil((piece.t1 - piece.t0) * o.steps_per_unit)));
    const double h = (piece.t1 - piece.t0) / m;
    for (int k = 1; k <= m; ++k) {
      const double k1 = f(piece.c, z);
      const double k2 = f(piece.c, z + 0.5 * h * k1);
      const double k3 = f(piece.c, z + 0.5 * h * k2);
      const double k4 = f(piece.c, z + h * k3);
      z = std::max(0.0, z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
      const double t = k == m ? piece.t1 : piece.t0 + k * h;
      const double bound = lemma3_bound(shifted, t);
      const double margin = (bound - z) / std::max(1.0, bound);
      if (margin < worst.margin) worst = {margin, t};
    }
  }
  return worst;
}

}  // namespace

FalsifyResult lemma3_falsify(const OdeBoundParams& p, int trials, double horizon,
                             const FalsifyOptions& options) {
  p.validate();
  if (trials < 1) throw DomainError("lemma3_falsify needs at least one trial");
  if (!(horizon > 0.0)) throw DomainError("lemma3_falsify needs a positive horizon");
  // one seed per trial, drawn up front so the result does not depend on the thread count
  std::mt19937_64 seeder(options.seed);
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(trials));
  for (auto& s : seeds) s = seeder();
  std::vector<TrialOutcome> outcomes(seeds.size());
  parallel_for(seeds.size(), options.threads,
               [&](std::size_t i) { outcomes[i] = run_trial(p, horizon, options, seeds[i]); });
  FalsifyResult r;
  r.worst_margin = outcomes[0].margin;
  r.worst_time = outcomes[0].time;
  r.worst_trial = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    if (outcomes[i].margin < r.worst_margin) {
      r.worst_margin = outcomes[i].margin;
      r.worst_time = outcomes[i].time;
      r.worst_trial = static_cast<int>(i);
    }
  }
  return r;
}

Envelopes theorem2_envelope(double X0, double C2, double r, double t, double f1_l2) {
  if (!(r >= 2.0 && r < 4.0)) throw DomainError("exponent r must lie in [2, 4)");
  const double g = r / (r + 2.0);
  const double base = std::pow(X0, g) + C2 * g * std::abs(t);
  const double b = std::pow(base, (r + 2.0) / (2.0 * r));
  return {b * b, 2.0 * b, f1_l2 + 2.0 * std::abs(t) * b};
}

double multi_term_bound(double Y0, double B, double r, double t) {
  const double k = r + 2.0;
  return std::pow(std::pow(Y0, 1.0 / k) + B * t / k, k);
}

}  // namespace perwave
