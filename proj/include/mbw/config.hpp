#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbw {

/// Reduced Planck constant [eV fs].
inline constexpr double kHbar = 0.6582119;
/// Electron rest mass [eV fs^2 / nm^2].
inline constexpr double kElectronMass = 5.685630;
/// Largest n*d supported by the fixed-capacity particle vectors.
inline constexpr int kMaxDof = 4;

/// Invalid configuration (bad keys, violated invariants).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How a scaled momentum is put back on the Delta p lattice.
enum class SnapRule {
  stochastic,  ///< floor or ceil, with probability given by the fractional part
  nearest,     ///< nearest integer, ties toward zero
};

struct DissipationParams {
  bool enabled = false;
  double r_prob = 0.0;  ///< per-component, per-step scattering probability
  double r_pct = 0.0;   ///< fractional momentum reduction, in (0, 1]
  SnapRule rounding = SnapRule::stochastic;
};

/// Geometry, lattice and time controls of one simulation.
///
/// The momentum step is always derived from the coherence length, so
/// momentum_step() * coherence_length == hbar * pi holds by construction.
struct SimConfig {
  int n_bodies = 2;
  int dims = 1;
  double domain_length = 50.0;     // nm, per axis
  double spatial_cell = 0.5;       // nm
  double coherence_length = 30.0;  // nm
  int m_max = 64;
  double mass = kElectronMass;
  double dt = 0.001;      // fs, free-flight and dissipation step
  double dt_obs = 0.05;   // fs, annihilation and observation period
  double t_final = 1.0;   // fs
  std::uint64_t seed = 1;
  double hbar = kHbar;
  DissipationParams dissipation;

  int dof() const { return n_bodies * dims; }
  int cells_per_axis() const;
  std::size_t spatial_cells() const;  // cells_per_axis()^dof()
  int momentum_count() const { return 2 * m_max + 1; }
  std::size_t offset_count() const;   // momentum_count()^dof()

  double momentum_step() const { return hbar * std::numbers::pi / coherence_length; }
  double wavenumber_step() const { return std::numbers::pi / coherence_length; }
  double velocity(int m) const { return m * momentum_step() / mass; }
  double cell_center(int cell) const { return (cell + 0.5) * spatial_cell; }
  /// dx * dp for one body.
  double body_cell_volume() const { return spatial_cell * momentum_step(); }

  long steps_per_epoch() const;
  long epochs_until(double t) const;

  /// Every violated invariant, in a fixed order. Empty means valid.
  std::vector<std::string> violations() const;
  /// Throws ConfigError listing violations().
  void validate() const;
};

/// True if `value` is an integer multiple of `unit` up to a relative 1e-9.
bool is_multiple_of(double value, double unit);

}  // namespace mbw
