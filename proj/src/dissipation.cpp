#include "mbw/dissipation.hpp"

#include <cmath>
#include <cstdlib>

namespace mbw {

int snap_scaled_momentum(int m, double r_pct, SnapRule rule, double u) {
  if (m == 0) return 0;
  const double a = (1.0 - r_pct) * std::abs(m);
  double whole = std::floor(a);
  const double frac = a - whole;
  switch (rule) {
    case SnapRule::stochastic:
      if (u < frac) whole += 1.0;
      break;
    case SnapRule::nearest:
      // 0.5 + slack: products like 10 * 0.85 land a few ulp either side of the tie
      if (frac > 0.5 + 1e-9) whole += 1.0;
      break;
  }
  const int mag = std::min(static_cast<int>(whole), std::abs(m));
  return m < 0 ? -mag : mag;
}

std::uint64_t apply_dissipation(SignedParticle& p, const DissipationParams& params, RngStream& rng) {
  if (!params.enabled || params.r_prob <= 0.0) return 0;
  std::uint64_t hits = 0;
  for (Eigen::Index i = 0; i < p.m.size(); ++i) {
    if (!(rng.uniform() < params.r_prob)) continue;
    ++hits;
    const double u = params.rounding == SnapRule::stochastic ? rng.uniform() : 0.0;
    p.m[i] = snap_scaled_momentum(p.m[i], params.r_pct, params.rounding, u);
  }
  return hits;
}

void apply_dissipation(Ensemble& e, const DissipationParams& params, std::uint64_t seed, std::uint64_t step) {
  if (!params.enabled) return;
  for (auto& p : e.particles) {
    RngStream rng(seed, p.id, step, StreamPurpose::dissipation);
    e.counters.dissipation_hits += apply_dissipation(p, params, rng);
  }
}

}  // namespace mbw
