#pragma once

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "mbw/config.hpp"

namespace mbw {

/// Positions of all n*d coordinates [nm]; stored inline, no heap.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDof, 1>;
/// Momentum lattice indices; momentum = index * Delta p.
using MomentumIndices = Eigen::Matrix<int, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDof, 1>;

struct SignedParticle {
  int sign = 1;
  Coords x;
  MomentumIndices m;
  std::uint64_t id = 0;
  bool alive = true;

  std::span<const double> position() const { return {x.data(), static_cast<std::size_t>(x.size())}; }
};

SignedParticle make_particle(int sign, std::span<const double> x, std::span<const int> m,
                             std::uint64_t id = 0);

struct EnsembleCounters {
  std::uint64_t created_pairs = 0;
  std::uint64_t annihilated_pairs = 0;
  std::uint64_t dissipation_hits = 0;
  std::uint64_t removed = 0;          // absorbed at the domain boundary
  std::uint64_t discarded_pairs = 0;  // pairs that would leave [-M_max, M_max]
};

struct Ensemble {
  std::vector<SignedParticle> particles;
  double t = 0.0;
  /// Signed phase-space integral of the seeding function, sum f_j * cell volume.
  double normalization = 1.0;
  EnsembleCounters counters;

  long net_sign() const;
};

/// Phase-space cell of a particle: one spatial cell per position coordinate and
/// the exact momentum index per momentum coordinate.
struct CellIndex {
  std::array<int, 2 * kMaxDof> components{};
  int dof = 0;

  auto operator<=>(const CellIndex&) const = default;
  /// Mixed-radix packing, unique for a given config.
  std::uint64_t pack(const SimConfig& cfg) const;
};

/// Free flight: x_i += (M_i Delta p / m) dt. Leaving [0, L] clears `alive`.
SignedParticle drift(SignedParticle p, double dt, const SimConfig& cfg);
void drift_in_place(SignedParticle& p, double dt, const SimConfig& cfg);

bool inside_domain(std::span<const double> x, const SimConfig& cfg);
/// Spatial cell of one coordinate; x == L maps to the last cell.
int spatial_cell_of(double x, const SimConfig& cfg);
/// Flat spatial cell (row-major over coordinates) of a position vector.
std::size_t flat_spatial_cell(std::span<const double> x, const SimConfig& cfg);

/// Throws std::out_of_range for positions outside the domain or |M| > M_max.
CellIndex cell_of(const SignedParticle& p, const SimConfig& cfg);
std::uint64_t cell_key(const SignedParticle& p, const SimConfig& cfg);

}  // namespace mbw
