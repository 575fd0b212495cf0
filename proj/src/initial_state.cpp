#include "mbw/initial_state.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace mbw {

namespace {

std::vector<MomentumIndices> all_momentum_vectors(const SimConfig& cfg) {
  const auto count = cfg.offset_count();
  const auto nm = static_cast<std::size_t>(cfg.momentum_count());
  std::vector<MomentumIndices> out(count, MomentumIndices(cfg.dof()));
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t rest = i;
    for (int d = cfg.dof(); d-- > 0;) {
      out[i][d] = static_cast<int>(rest % nm) - cfg.m_max;
      rest /= nm;
    }
  }
  return out;
}

void spatial_centres(std::size_t cell, const SimConfig& cfg, std::vector<double>& x) {
  const auto n = static_cast<std::size_t>(cfg.cells_per_axis());
  for (std::size_t i = x.size(); i-- > 0;) {
    x[i] = cfg.cell_center(static_cast<int>(cell % n));
    cell /= n;
  }
}

}  // namespace

void EntangledParams::check() const {
  for (double s : {sigma_x1, sigma_x2, sigma_p1, sigma_p2, sigma_0, sigma_ent_x, sigma_ent_p})
    if (!(s > 0.0)) throw std::invalid_argument("EntangledParams: dispersions must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("EntangledParams: C must be positive");
}

double eval_entangled_f0(double x1, double x2, double k1, double k2, const EntangledParams& p,
                         double wavenumber_step) {
  auto sq = [](double v) { return v * v; };
  const double product = std::exp(-sq((x1 - p.x1) / p.sigma_x1) - sq((k1 - p.p1) / p.sigma_p1) -
                                  sq((x2 - p.x2) / p.sigma_x2) - sq((k2 - p.p2) / p.sigma_p2));
  const double sp = p.sigma_ent_p * wavenumber_step;
  const double cross = std::exp(-sq((x1 - p.x1) / p.sigma_ent_x) - sq((x2 - p.x2) / p.sigma_ent_x) -
                                std::hypot(k1 - p.p1, k2 - p.p2) / p.sigma_0) *
                       2.0 * std::sin((k1 - p.p1) / sp) * 2.0 * std::sin((k2 - p.p2) / sp);
  return p.c * (product + cross);
}

double eval_ferry_pair(double x, double k, const FerryPairParams& p) {
  const double s2 = p.sigma * p.sigma;
  const double r = x - p.center;
  auto packet = [s2](double dx, double dk) { return std::exp(-dx * dx / (2.0 * s2) - 2.0 * s2 * dk * dk); };
  const double value = packet(r - p.x0, k - p.p0) + packet(r + p.x0, k + p.p0) +
                       2.0 * packet(r, k) * std::cos(p.x0 * k);
  return value / (2.0 * std::numbers::pi);
}

InitialDistribution::BlockFn InitialDistribution::block_evaluator(const SimConfig& cfg) const {
  auto momenta = std::make_shared<std::vector<MomentumIndices>>(all_momentum_vectors(cfg));
  const double dk = cfg.wavenumber_step();
  return [this, momenta, dk](std::span<const double> x, std::span<double> out) {
    std::array<double, kMaxDof> k{};
    for (std::size_t i = 0; i < momenta->size(); ++i) {
      const auto& m = (*momenta)[i];
      for (Eigen::Index d = 0; d < m.size(); ++d) k[static_cast<std::size_t>(d)] = m[d] * dk;
      out[i] = (*this)(x, std::span<const double>(k.data(), static_cast<std::size_t>(m.size())));
    }
  };
}

EntangledDistribution::EntangledDistribution(EntangledParams p, double wavenumber_step)
    : p_(p), dk_(wavenumber_step) {
  p_.check();
  if (!(dk_ > 0.0)) throw std::invalid_argument("EntangledDistribution: wavenumber step must be positive");
}

double EntangledDistribution::operator()(std::span<const double> x, std::span<const double> k) const {
  return eval_entangled_f0(x[0], x[1], k[0], k[1], p_, dk_);
}

// f = C [gx(x1, x2) P(k1, k2) + ex(x1, x2) Q(k1, k2)], so a momentum block is a
// linear combination of two fixed matrices.
InitialDistribution::BlockFn EntangledDistribution::block_evaluator(const SimConfig& cfg) const {
  if (cfg.dof() != 2) throw std::invalid_argument("EntangledDistribution: needs two coordinates");
  const Eigen::Index nm = cfg.momentum_count();
  const double dk = cfg.wavenumber_step();
  auto sq = [](double v) { return v * v; };
  auto pq = std::make_shared<std::pair<Eigen::VectorXd, Eigen::VectorXd>>();
  pq->first.resize(nm * nm);
  pq->second.resize(nm * nm);
  const double sp = p_.sigma_ent_p * dk_;
  for (Eigen::Index i = 0; i < nm; ++i) {
    const double k1 = static_cast<double>(i - cfg.m_max) * dk;
    for (Eigen::Index j = 0; j < nm; ++j) {
      const double k2 = static_cast<double>(j - cfg.m_max) * dk;
      pq->first[i * nm + j] = std::exp(-sq((k1 - p_.p1) / p_.sigma_p1) - sq((k2 - p_.p2) / p_.sigma_p2));
      pq->second[i * nm + j] = std::exp(-std::hypot(k1 - p_.p1, k2 - p_.p2) / p_.sigma_0) * 2.0 *
                               std::sin((k1 - p_.p1) / sp) * 2.0 * std::sin((k2 - p_.p2) / sp);
    }
  }
  const EntangledParams p = p_;
  return [pq, p, sq](std::span<const double> x, std::span<double> out) {
    const double a = p.c * std::exp(-sq((x[0] - p.x1) / p.sigma_x1) - sq((x[1] - p.x2) / p.sigma_x2));
    const double b = p.c * std::exp(-sq((x[0] - p.x1) / p.sigma_ent_x) - sq((x[1] - p.x2) / p.sigma_ent_x));
    Eigen::Map<Eigen::VectorXd> o(out.data(), static_cast<Eigen::Index>(out.size()));
    o = a * pq->first + b * pq->second;
  };
}

EntangledDistribution EntangledDistribution::normalized(EntangledParams p, const SimConfig& cfg) {
  p.c = 1.0;
  EntangledDistribution raw(p, cfg.wavenumber_step());
  const auto block = raw.block_evaluator(cfg);
  std::vector<double> values(cfg.offset_count());
  std::vector<double> x(2);
  double sum = 0.0;
  for (std::size_t c = 0; c < cfg.spatial_cells(); ++c) {
    spatial_centres(c, cfg, x);
    block(x, values);
    for (double v : values) sum += v;
  }
  sum *= seeding_cell_volume(cfg);
  if (!(sum > 0.0)) throw std::invalid_argument("EntangledDistribution: grid integral is not positive");
  p.c = 1.0 / sum;
  return EntangledDistribution(p, cfg.wavenumber_step());
}

double seeding_cell_volume(const SimConfig& cfg) {
  return std::pow(cfg.spatial_cell * cfg.wavenumber_step(), cfg.dof());
}

Ensemble seed_ensemble(const InitialDistribution& f0, std::size_t n_target, const SimConfig& cfg) {
  cfg.validate();
  if (n_target < 1) throw std::invalid_argument("seed_ensemble: N_target must be >= 1");
  if (f0.dof() != cfg.dof()) throw std::invalid_argument("seed_ensemble: distribution/config dof mismatch");

  const auto momenta = all_momentum_vectors(cfg);
  const auto block = f0.block_evaluator(cfg);
  std::vector<double> values(momenta.size());
  std::vector<double> x(static_cast<std::size_t>(cfg.dof()));

  double abs_sum = 0.0;
  double signed_sum = 0.0;
  for (std::size_t c = 0; c < cfg.spatial_cells(); ++c) {
    spatial_centres(c, cfg, x);
    block(x, values);
    for (double v : values) {
      abs_sum += std::abs(v);
      signed_sum += v;
    }
  }
  if (!(abs_sum > 0.0) || !std::isfinite(abs_sum)) throw EmptyInitialState();

  Ensemble e;
  e.normalization = signed_sum * seeding_cell_volume(cfg);
  const double scale = static_cast<double>(n_target) / abs_sum;
  std::uint64_t next_id = 0;
  SignedParticle proto;
  proto.x.resize(cfg.dof());
  for (std::size_t c = 0; c < cfg.spatial_cells(); ++c) {
    spatial_centres(c, cfg, x);
    block(x, values);
    for (std::size_t i = 0; i < values.size(); ++i) {
      const auto count = static_cast<std::uint64_t>(std::llround(std::abs(values[i]) * scale));
      if (count == 0) continue;
      proto.sign = values[i] > 0.0 ? 1 : -1;
      for (int d = 0; d < cfg.dof(); ++d) proto.x[d] = x[static_cast<std::size_t>(d)];
      proto.m = momenta[i];
      for (std::uint64_t k = 0; k < count; ++k) {
        proto.id = next_id++;
        e.particles.push_back(proto);
      }
    }
  }
  if (e.particles.empty())
    throw EmptyInitialState("seed_ensemble: N_target = " + std::to_string(n_target) +
                            " places no particle (every cell rounds to zero)");
  return e;
}

}  // namespace mbw
