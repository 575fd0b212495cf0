#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mbw/config.hpp"
#include "mbw/phase_space.hpp"
#include "mbw/rng.hpp"
#include "mbw/wigner_kernel.hpp"

namespace mbw {

/// Runaway creation or population growth; the run stops with a report.
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kNoEvent = std::numeric_limits<double>::infinity();

/// -ln(u) / gamma, or kNoEvent when gamma == 0. u must lie in (0, 1].
double free_flight_time(double gamma, double u);

struct ApplySStats {
  std::uint64_t created_pairs = 0;
  std::uint64_t discarded_pairs = 0;
  std::uint64_t removed = 0;
};

/// Operator S over [0, duration]: free flight between exponentially distributed
/// events; each event creates (+s, M + M*) and (-s, M - M*) at the parent's
/// position, and every new particle is evolved in turn (work queue, no
/// recursion). Survivors are appended to `out`; absorbed particles are counted.
///
/// `stream_for(id)` returns the random stream of particle `id` for this step;
/// it must provide uniform() in [0, 1) and uniform_open() in (0, 1).
/// Pairs with a component outside [-M_max, M_max] are dropped together.
template <class StreamFor>
  requires std::invocable<StreamFor&, std::uint64_t>
ApplySStats apply_S(const SignedParticle& p, double duration, const KernelTable& table, StreamFor&& stream_for,
                    std::uint64_t step, std::vector<SignedParticle>& out, std::size_t descendant_cap = 1'000'000) {
  const SimConfig& cfg = table.config();
  ApplySStats stats;
  if (table.all_zero()) {
    SignedParticle q = drift(p, duration, cfg);
    if (q.alive) out.push_back(q);
    else ++stats.removed;
    return stats;
  }

  struct Pending {
    SignedParticle particle;
    double elapsed;
  };
  std::deque<Pending> queue;
  queue.push_back({p, 0.0});
  std::size_t descendants = 0;

  while (!queue.empty()) {
    SignedParticle q = std::move(queue.front().particle);
    double t = queue.front().elapsed;
    queue.pop_front();
    auto rng = stream_for(q.id);
    std::uint64_t birth = 0;
    if (!inside_domain(q.position(), cfg)) {
      ++stats.removed;
      continue;
    }
    for (;;) {
      const std::size_t cell = flat_spatial_cell(q.position(), cfg);
      const double g = table.gamma_of_cell(cell);
      const double dt = g > 0.0 ? free_flight_time(g, rng.uniform_open()) : kNoEvent;
      if (t + dt >= duration) {
        drift_in_place(q, duration - t, cfg);
        if (q.alive) out.push_back(std::move(q));
        else ++stats.removed;
        break;
      }
      drift_in_place(q, dt, cfg);
      t += dt;
      if (!q.alive) {
        ++stats.removed;
        break;
      }
      const MomentumIndices offset = table.sample_in_cell(flat_spatial_cell(q.position(), cfg), rng.uniform());
      const MomentumIndices up = q.m + offset;
      const MomentumIndices down = q.m - offset;
      const std::uint64_t first = birth;
      birth += 2;
      if (up.cwiseAbs().maxCoeff() > cfg.m_max || down.cwiseAbs().maxCoeff() > cfg.m_max) {
        ++stats.discarded_pairs;
        continue;
      }
      SignedParticle same = q;
      same.m = up;
      same.id = child_id(q.id, step, first);
      SignedParticle opposite = q;
      opposite.sign = -q.sign;
      opposite.m = down;
      opposite.id = child_id(q.id, step, first + 1);
      queue.push_back({std::move(same), t});
      queue.push_back({std::move(opposite), t});
      ++stats.created_pairs;
      descendants += 2;
      if (descendants > descendant_cap)
        throw RuntimeAbort("apply_S: particle " + std::to_string(p.id) + " exceeded " +
                           std::to_string(descendant_cap) + " live descendants");
    }
  }
  return stats;
}

/// apply_S with the engine's Philox streams keyed by (seed, id) at `step`.
ApplySStats apply_S(const SignedParticle& p, double duration, const KernelTable& table, std::uint64_t seed,
                    std::uint64_t step, std::vector<SignedParticle>& out, std::size_t descendant_cap = 1'000'000);

/// Grid annihilation: in every phase-space cell only |n+ - n-| particles of the
/// majority sign survive, chosen as the first ones in (cell, id) order; they
/// keep their own positions. The result is in canonical (cell, id) order.
/// Returns the number of annihilated pairs.
std::uint64_t annihilate(Ensemble& e, const SimConfig& cfg);

struct EpochReport {
  long epoch = 0;
  double t = 0.0;
  std::uint64_t particles_before = 0;
  std::uint64_t particles_after = 0;
  std::uint64_t created_pairs = 0;
  std::uint64_t annihilated_pairs = 0;
  std::uint64_t removed = 0;
  std::uint64_t discarded_pairs = 0;
  std::uint64_t dissipation_hits = 0;
  double wall_seconds = 0.0;  // diagnostic only, never written to report files
};

struct RunOptions {
  int threads = 1;
  std::size_t particle_cap = 50'000'000;
  std::size_t descendant_cap = 1'000'000;
  std::ostream* progress = nullptr;  // one line per epoch
  std::function<void(const Ensemble&, const EpochReport&)> on_epoch;
};

/// Advances e to cfg.t_final in epochs of dt_obs. Each epoch runs dt_obs / dt
/// steps of (operator S over dt, then dissipation) for every particle family,
/// then annihilates and calls on_epoch. Results do not depend on threads.
std::vector<EpochReport> run(Ensemble& e, const SimConfig& cfg, const KernelTable& table,
                             const RunOptions& options = {});

}  // namespace mbw
