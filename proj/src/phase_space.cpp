#include "mbw/phase_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mbw {

SignedParticle make_particle(int sign, std::span<const double> x, std::span<const int> m,
                             std::uint64_t id) {
  if (x.size() != m.size() || x.empty() || x.size() > static_cast<std::size_t>(kMaxDof))
    throw std::invalid_argument("make_particle: inconsistent coordinate counts");
  if (sign != 1 && sign != -1) throw std::invalid_argument("make_particle: sign must be +1 or -1");
  SignedParticle p;
  p.sign = sign;
  p.id = id;
  p.x.resize(static_cast<Eigen::Index>(x.size()));
  p.m.resize(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    p.x[static_cast<Eigen::Index>(i)] = x[i];
    p.m[static_cast<Eigen::Index>(i)] = m[i];
  }
  return p;
}

long Ensemble::net_sign() const {
  long net = 0;
  for (const auto& p : particles) net += p.sign;
  return net;
}

std::uint64_t CellIndex::pack(const SimConfig& cfg) const {
  const auto nx = static_cast<std::uint64_t>(cfg.cells_per_axis());
  const auto nm = static_cast<std::uint64_t>(cfg.momentum_count());
  std::uint64_t key = 0;
  for (int i = 0; i < dof; ++i) key = key * nx + static_cast<std::uint64_t>(components[i]);
  for (int i = 0; i < dof; ++i)
    key = key * nm + static_cast<std::uint64_t>(components[dof + i] + cfg.m_max);
  return key;
}

void drift_in_place(SignedParticle& p, double dt, const SimConfig& cfg) {
  const double scale = cfg.momentum_step() / cfg.mass * dt;
  p.x += p.m.cast<double>() * scale;
  if (!inside_domain(p.position(), cfg)) p.alive = false;
}

SignedParticle drift(SignedParticle p, double dt, const SimConfig& cfg) {
  drift_in_place(p, dt, cfg);
  return p;
}

bool inside_domain(std::span<const double> x, const SimConfig& cfg) {
  for (double xi : x)
    if (!(xi >= 0.0 && xi <= cfg.domain_length)) return false;
  return true;
}

int spatial_cell_of(double x, const SimConfig& cfg) {
  const int n = cfg.cells_per_axis();
  const int c = static_cast<int>(std::floor(x / cfg.spatial_cell));
  return c >= n ? n - 1 : c;
}

std::size_t flat_spatial_cell(std::span<const double> x, const SimConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.cells_per_axis());
  std::size_t flat = 0;
  for (double xi : x) flat = flat * n + static_cast<std::size_t>(spatial_cell_of(xi, cfg));
  return flat;
}

CellIndex cell_of(const SignedParticle& p, const SimConfig& cfg) {
  const auto dof = static_cast<int>(p.x.size());
  if (!inside_domain(p.position(), cfg))
    throw std::out_of_range("cell_of: particle outside the domain");
  CellIndex c;
  c.dof = dof;
  for (int i = 0; i < dof; ++i) {
    const int m = p.m[i];
    if (m < -cfg.m_max || m > cfg.m_max)
      throw std::out_of_range("cell_of: momentum index " + std::to_string(m) + " exceeds M_max");
    c.components[i] = spatial_cell_of(p.x[i], cfg);
    c.components[dof + i] = m;
  }
  return c;
}

std::uint64_t cell_key(const SignedParticle& p, const SimConfig& cfg) {
  return cell_of(p, cfg).pack(cfg);
}

}  // namespace mbw
