#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbw/config.hpp"
#include "mbw/phase_space.hpp"
#include "mbw/potential.hpp"

namespace mbw {

/// Quadrature did not meet its error tolerance.
class KernelError : public std::runtime_error {
 public:
  KernelError(long cell, double estimate, const std::string& what)
      : std::runtime_error(what), cell_(cell), estimate_(estimate) {}
  long cell() const { return cell_; }
  double estimate() const { return estimate_; }

 private:
  long cell_;
  double estimate_;
};

struct KernelOptions {
  int points_per_cell = 8;  // trapezoid nodes per spatial cell along each s-axis
  double tolerance = 1e-10;  // absolute, 1/fs, per entry
  int max_refinements = 6;   // interval halvings allowed on top of the nominal rule
  std::size_t memory_budget = std::size_t{8} << 30;
};

/// Nested composite trapezoid rules over s in [-L_C/2, L_C/2]. Level 0 has
/// points_per_cell nodes per cell; level l halves the spacing l times. The
/// truncated interval makes the plain rule only O(h^2) wherever
/// V(x +- L_C/2) differs, so rows are Romberg-extrapolated across levels until
/// two successive diagonal entries agree within the tolerance.
struct KernelQuadrature {
  int levels = 0;           // refinements available (finest level index)
  int base_intervals = 0;   // intervals of the level-0 rule
  double finest_step = 0.0;
  Eigen::VectorXd nodes;    // finest level, nodes[n - j] == -nodes[j]
  Eigen::MatrixXd sin_t;    // sin(2 pi M s_j / L_C), (2 M_max + 1) x nodes
  Eigen::MatrixXd cos_t;    // two coordinates only

  KernelQuadrature(const SimConfig& cfg, const KernelOptions& opt);
  /// Node stride of level l within the finest grid.
  Eigen::Index stride(int level) const { return Eigen::Index{1} << (levels - level); }
};

/// Semi-discrete Wigner kernel at position x for every offset vector M'
/// (|M'_i| <= M_max, lexicographic with the last coordinate fastest):
///
///   V_W(x; M') = 1/(i hbar L_C^n) Int ds exp(-2i M' Delta p . s / hbar) [V(x+s) - V(x-s)]
///
/// which is real and equals -1/(hbar L_C^n) Int ds sin(2 pi M'.s / L_C) [V(x+s) - V(x-s)].
/// Throws KernelError (carrying `cell`) if the extrapolated entries have not
/// settled within opt.tolerance after opt.max_refinements halvings.
Eigen::VectorXd kernel_row(const Potential& v, std::span<const double> x, const SimConfig& cfg,
                           const KernelOptions& opt = {}, long cell = -1);
Eigen::VectorXd kernel_row(const Potential& v, std::span<const double> x, const SimConfig& cfg,
                           const KernelQuadrature& quad, const KernelOptions& opt, long cell);

/// Offset vector for a flat lexicographic offset index.
MomentumIndices offset_from_index(std::size_t index, const SimConfig& cfg);
std::size_t index_from_offset(const MomentumIndices& offset, const SimConfig& cfg);

/// Positive kernel part, creation rate and sampling table for every spatial cell.
/// Immutable once built; cheap to copy; safe to share across threads.
class KernelTable {
 public:
  struct Entry {
    std::uint32_t offset;  // flat offset index
    double value;          // V_W^+ > 0
    double cdf;            // normalized cumulative, last entry == 1
  };

  const SimConfig& config() const;
  bool all_zero() const;
  bool lazy() const;
  std::size_t cell_count() const;

  double gamma_of_cell(std::size_t cell) const;
  /// Positive entries of the cell in canonical offset order.
  std::span<const Entry> entries(std::size_t cell) const;
  /// Dense V_W^+ row over all offsets.
  Eigen::VectorXd positive_row(std::size_t cell) const;
  /// Inverse-CDF draw over the cell's offsets; throws if gamma == 0.
  MomentumIndices sample_in_cell(std::size_t cell, double u) const;

 private:
  struct Row {
    double gamma = 0.0;
    std::vector<Entry> entries;
  };
  struct Impl;

  const Row& row(std::size_t cell) const;
  static Row make_row(const Eigen::VectorXd& kernel);

  std::shared_ptr<Impl> impl_;

  friend KernelTable build_table(const Potential&, const SimConfig&, const KernelOptions&);
  friend KernelTable load_table(const std::filesystem::path&, const SimConfig&, std::uint64_t);
};

KernelTable build_table(const Potential& v, const SimConfig& cfg, const KernelOptions& opt = {});

/// Creation rate of the cell containing x. Throws std::out_of_range outside the domain.
double gamma(const KernelTable& table, std::span<const double> x);
/// Offset M' with probability V_W^+(c; M') / gamma(c), c = cell of x; u in [0, 1).
MomentumIndices sample_offset(const KernelTable& table, std::span<const double> x, double u);

/// Cache key over (potential name, geometry, lattice, quadrature).
std::uint64_t table_hash(const Potential& v, const SimConfig& cfg, const KernelOptions& opt = {});
/// Header (magic, version, dof, hash, cells, offsets) then row-major V_W^+ as
/// little-endian float64.
void save_table(const KernelTable& table, const std::filesystem::path& path, std::uint64_t hash);
/// Throws std::runtime_error on a bad header or a hash mismatch.
KernelTable load_table(const std::filesystem::path& path, const SimConfig& cfg, std::uint64_t hash);

}  // namespace mbw
