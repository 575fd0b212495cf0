#include "mbw/config.hpp"

#include <cmath>
#include <sstream>

namespace mbw {

bool is_multiple_of(double value, double unit) {
  if (unit <= 0.0) return false;
  const double ratio = value / unit;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, std::abs(ratio));
}

int SimConfig::cells_per_axis() const {
  return static_cast<int>(std::lround(domain_length / spatial_cell));
}

std::size_t SimConfig::spatial_cells() const {
  std::size_t n = 1;
  for (int i = 0; i < dof(); ++i) n *= static_cast<std::size_t>(cells_per_axis());
  return n;
}

std::size_t SimConfig::offset_count() const {
  std::size_t n = 1;
  for (int i = 0; i < dof(); ++i) n *= static_cast<std::size_t>(momentum_count());
  return n;
}

long SimConfig::steps_per_epoch() const { return std::lround(dt_obs / dt); }

long SimConfig::epochs_until(double t) const { return std::lround(t / dt_obs); }

std::vector<std::string> SimConfig::violations() const {
  std::vector<std::string> out;
  auto fail = [&out](std::string msg) { out.push_back(std::move(msg)); };

  if (n_bodies < 1 || n_bodies > 2) fail("n_bodies must be 1 or 2");
  if (dims != 1) fail("dims must be 1");
  if (!(domain_length > 0.0)) fail("domain_length must be positive");
  if (!(spatial_cell > 0.0)) {
    fail("spatial_cell must be positive");
  } else if (domain_length > 0.0 && !is_multiple_of(domain_length, spatial_cell)) {
    fail("spatial_cell must divide domain_length into an integer number of cells");
  }
  if (!(coherence_length > 0.0)) fail("coherence_length must be positive");
  if (m_max < 1) fail("m_max must be at least 1");
  if (!(mass > 0.0)) fail("mass must be positive");
  if (!(hbar > 0.0)) fail("hbar must be positive");
  if (!(dt > 0.0)) fail("dt must be positive");
  if (!(dt_obs > 0.0)) {
    fail("dt_obs must be positive");
  } else if (dt > 0.0 && !is_multiple_of(dt_obs, dt)) {
    fail("dt_obs must be an integer multiple of dt");
  }
  if (!(t_final >= 0.0)) {
    fail("t_final must be non-negative");
  } else if (dt_obs > 0.0 && !is_multiple_of(t_final, dt_obs)) {
    fail("t_final must be an integer multiple of dt_obs");
  }
  if (dissipation.enabled) {
    if (!(dissipation.r_prob >= 0.0 && dissipation.r_prob <= 1.0))
      fail("dissipation.r_prob must lie in [0, 1]");
    if (!(dissipation.r_pct > 0.0 && dissipation.r_pct <= 1.0))
      fail("dissipation.r_pct must lie in (0, 1]");
  }
  if (out.empty()) {
    // packed annihilation keys are mixed-radix numbers in 63 bits
    const double radix = static_cast<double>(cells_per_axis()) * momentum_count();
    if (dof() * std::log2(radix) >= 63.0) fail("grid too large for 64-bit cell keys");
  }
  return out;
}

void SimConfig::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::ostringstream msg;
  msg << "invalid configuration:";
  for (const auto& s : v) msg << "\n  " << s;
  throw ConfigError(msg.str());
}

}  // namespace mbw
