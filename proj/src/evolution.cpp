#include "mbw/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <tuple>

#include "mbw/dissipation.hpp"
#include "mbw/parallel.hpp"

namespace mbw {

double free_flight_time(double gamma, double u) {
  if (!(u > 0.0 && u <= 1.0)) throw std::domain_error("free_flight_time: u must lie in (0, 1]");
  if (gamma < 0.0) throw std::domain_error("free_flight_time: negative rate");
  if (gamma == 0.0) return kNoEvent;
  return -std::log(u) / gamma;
}

ApplySStats apply_S(const SignedParticle& p, double duration, const KernelTable& table, std::uint64_t seed,
                    std::uint64_t step, std::vector<SignedParticle>& out, std::size_t descendant_cap) {
  return apply_S(
      p, duration, table, [seed, step](std::uint64_t id) { return RngStream(seed, id, step, StreamPurpose::flight); },
      step, out, descendant_cap);
}

std::uint64_t annihilate(Ensemble& e, const SimConfig& cfg) {
  auto& ps = e.particles;
  std::vector<std::tuple<std::uint64_t, std::uint64_t, std::uint32_t>> order;
  order.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    order.emplace_back(cell_key(ps[i], cfg), ps[i].id, static_cast<std::uint32_t>(i));
  std::sort(order.begin(), order.end());

  std::vector<SignedParticle> kept;
  kept.reserve(ps.size());
  std::uint64_t pairs = 0;
  for (std::size_t begin = 0; begin < order.size();) {
    std::size_t end = begin;
    long net = 0;
    while (end < order.size() && std::get<0>(order[end]) == std::get<0>(order[begin])) {
      net += ps[std::get<2>(order[end])].sign;
      ++end;
    }
    const int majority = net > 0 ? 1 : -1;
    long wanted = net > 0 ? net : -net;
    for (std::size_t k = begin; k < end && wanted > 0; ++k) {
      const auto& p = ps[std::get<2>(order[k])];
      if (p.sign == majority) {
        kept.push_back(p);
        --wanted;
      }
    }
    pairs += (end - begin - static_cast<std::size_t>(net > 0 ? net : -net)) / 2;
    begin = end;
  }
  ps = std::move(kept);
  e.counters.annihilated_pairs += pairs;
  return pairs;
}

namespace {

struct ChunkResult {
  std::vector<SignedParticle> particles;
  ApplySStats stats;
  std::uint64_t hits = 0;
};

void evolve_family(const SignedParticle& p, const SimConfig& cfg, const KernelTable& table, std::uint64_t first_step,
                   long steps, double step_length, const RunOptions& opt, ChunkResult& out) {
  const bool dissipate = cfg.dissipation.enabled && cfg.dissipation.r_prob > 0.0;
  std::vector<SignedParticle> family{p};
  std::vector<SignedParticle> next;
  for (long k = 0; k < steps; ++k) {
    const std::uint64_t step = first_step + static_cast<std::uint64_t>(k);
    next.clear();
    for (const auto& q : family) {
      const auto s = apply_S(q, step_length, table, cfg.seed, step, next, opt.descendant_cap);
      out.stats.created_pairs += s.created_pairs;
      out.stats.discarded_pairs += s.discarded_pairs;
      out.stats.removed += s.removed;
    }
    if (dissipate) {
      for (auto& q : next) {
        RngStream rng(cfg.seed, q.id, step, StreamPurpose::dissipation);
        out.hits += apply_dissipation(q, cfg.dissipation, rng);
      }
    }
    std::swap(family, next);
    if (family.size() > opt.descendant_cap)
      throw RuntimeAbort("particle " + std::to_string(p.id) + " exceeded " + std::to_string(opt.descendant_cap) +
                         " live descendants");
  }
  out.particles.insert(out.particles.end(), family.begin(), family.end());
}

}  // namespace

std::vector<EpochReport> run(Ensemble& e, const SimConfig& cfg, const KernelTable& table, const RunOptions& opt) {
  cfg.validate();
  if (cfg.t_final < e.t - 1e-12) throw std::invalid_argument("run: t_final precedes the ensemble time");

  const long first_epoch = cfg.epochs_until(e.t);
  const long last_epoch = cfg.epochs_until(cfg.t_final);
  const long steps_per_epoch = cfg.steps_per_epoch();
  // without creation or noise the steps of an epoch collapse into one drift
  const bool collapse = table.all_zero() && !(cfg.dissipation.enabled && cfg.dissipation.r_prob > 0.0);

  std::vector<EpochReport> reports;
  for (long epoch = first_epoch; epoch < last_epoch; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochReport rep;
    rep.epoch = epoch + 1;
    rep.particles_before = e.particles.size();

    const int workers = std::max(1, opt.threads);
    std::vector<ChunkResult> chunks(static_cast<std::size_t>(workers));
    const auto first_step = static_cast<std::uint64_t>(epoch) * static_cast<std::uint64_t>(steps_per_epoch);
    parallel_chunks(e.particles.size(), workers, [&](std::size_t w, std::size_t begin, std::size_t end) {
      auto& out = chunks[w];
      out.particles.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        if (collapse)
          evolve_family(e.particles[i], cfg, table, first_step, 1, cfg.dt_obs, opt, out);
        else
          evolve_family(e.particles[i], cfg, table, first_step, steps_per_epoch, cfg.dt, opt, out);
      }
    });

    std::size_t total = 0;
    for (const auto& c : chunks) total += c.particles.size();
    if (total > opt.particle_cap)
      throw RuntimeAbort("particle count " + std::to_string(total) + " exceeds the cap of " +
                         std::to_string(opt.particle_cap) + " at t = " + std::to_string((epoch + 1) * cfg.dt_obs) +
                         " fs");
    e.particles.clear();
    e.particles.reserve(total);
    for (auto& c : chunks) {
      e.particles.insert(e.particles.end(), c.particles.begin(), c.particles.end());
      rep.created_pairs += c.stats.created_pairs;
      rep.discarded_pairs += c.stats.discarded_pairs;
      rep.removed += c.stats.removed;
      rep.dissipation_hits += c.hits;
    }
    e.counters.created_pairs += rep.created_pairs;
    e.counters.discarded_pairs += rep.discarded_pairs;
    e.counters.removed += rep.removed;
    e.counters.dissipation_hits += rep.dissipation_hits;

    rep.annihilated_pairs = annihilate(e, cfg);
    rep.particles_after = e.particles.size();
    // snap to 1e-12 fs so that 58 * 0.05 prints as 2.9
    e.t = std::round(static_cast<double>(epoch + 1) * cfg.dt_obs * 1e12) / 1e12;
    rep.t = e.t;
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (opt.progress)
      *opt.progress << "t=" << rep.t << " particles=" << rep.particles_after << " created=" << rep.created_pairs
                    << " annihilated=" << rep.annihilated_pairs << " wall=" << rep.wall_seconds << "s\n"
                    << std::flush;
    if (opt.on_epoch) opt.on_epoch(e, rep);
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace mbw
