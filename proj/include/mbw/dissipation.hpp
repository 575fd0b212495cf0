#pragma once

#include <cstdint>

#include "mbw/config.hpp"
#include "mbw/phase_space.hpp"
#include "mbw/rng.hpp"

namespace mbw {

/// Puts (1 - r_pct) * m back on the integer lattice. `u` is only used by the
/// stochastic rule (rounds up with probability equal to the fractional part).
/// Never increases |m|.
int snap_scaled_momentum(int m, double r_pct, SnapRule rule, double u);

/// Scatters each momentum component of p independently with probability
/// r_prob. Returns the number of components hit. Sign and position untouched.
std::uint64_t apply_dissipation(SignedParticle& p, const DissipationParams& params, RngStream& rng);

/// Ensemble-wide form for time step `step`: each particle uses its own
/// dissipation stream (seed, id, step).
void apply_dissipation(Ensemble& e, const DissipationParams& params, std::uint64_t seed, std::uint64_t step);

}  // namespace mbw
