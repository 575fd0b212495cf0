#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>

#include "mbw/config.hpp"
#include "mbw/phase_space.hpp"

namespace mbw {

/// Two-body entangled Gaussian quasi-distribution. Momenta are wavenumbers
/// [1/nm]; sigma_ent_p is given in units of the wavenumber step pi / L_C.
struct EntangledParams {
  double x1 = 15.0, x2 = 35.0;  // nm
  double p1 = 0.0, p2 = 0.0;    // 1/nm
  double sigma_x1 = 3.0, sigma_x2 = 3.0;
  double sigma_p1 = 1.0 / 3.0, sigma_p2 = 1.0 / 3.0;
  double sigma_0 = 0.75;
  double sigma_ent_x = 2.5;
  double sigma_ent_p = 1.5;  // multiples of pi / L_C
  double c = 1.0;

  /// Throws std::invalid_argument if a dispersion or C is not positive.
  void check() const;
};

/// Two counter-propagating Gaussian packets around `center`: +x0 moving with
/// +p0 and -x0 with -p0 (relative coordinates). p0 in 1/nm.
struct FerryPairParams {
  double center = 25.0;
  double x0 = 5.0;
  double p0 = 0.0;
  double sigma = 1.0;
};

/// f_W^0(x1, x2; k1, k2) including the entanglement cross term. k in 1/nm.
double eval_entangled_f0(double x1, double x2, double k1, double k2, const EntangledParams& p,
                         double wavenumber_step);
/// (1/h) [G(x - x0, k - p0) + G(x + x0, k + p0) + 2 exp(-x^2/2s^2 - 2 s^2 k^2) cos(x0 k)], h = 2 pi,
/// with x measured from `center`.
double eval_ferry_pair(double x, double k, const FerryPairParams& p);

/// A quasi-distribution over (x, k) for cfg.dof() coordinates.
class InitialDistribution {
 public:
  /// Writes f at position x for every momentum index vector (lexicographic,
  /// last coordinate fastest) into out[0 .. offset_count).
  using BlockFn = std::function<void(std::span<const double> x, std::span<double> out)>;

  virtual ~InitialDistribution() = default;
  virtual int dof() const = 0;
  virtual double operator()(std::span<const double> x, std::span<const double> k) const = 0;
  virtual BlockFn block_evaluator(const SimConfig& cfg) const;
};

class EntangledDistribution final : public InitialDistribution {
 public:
  explicit EntangledDistribution(EntangledParams p, double wavenumber_step);
  /// Same parameters with C chosen so that sum f * (dx dk)^2 = 1 over the grid.
  static EntangledDistribution normalized(EntangledParams p, const SimConfig& cfg);

  int dof() const override { return 2; }
  double operator()(std::span<const double> x, std::span<const double> k) const override;
  BlockFn block_evaluator(const SimConfig& cfg) const override;
  const EntangledParams& params() const { return p_; }

 private:
  EntangledParams p_;
  double dk_;
};

class FerryPairDistribution final : public InitialDistribution {
 public:
  explicit FerryPairDistribution(FerryPairParams p) : p_(p) {}
  int dof() const override { return 1; }
  double operator()(std::span<const double> x, std::span<const double> k) const override {
    return eval_ferry_pair(x[0], k[0], p_);
  }

 private:
  FerryPairParams p_;
};

/// Adapter for plain callables f(x, k).
class FunctionDistribution final : public InitialDistribution {
 public:
  using Fn = std::function<double(std::span<const double>, std::span<const double>)>;
  FunctionDistribution(int dof, Fn fn) : dof_(dof), fn_(std::move(fn)) {}
  int dof() const override { return dof_; }
  double operator()(std::span<const double> x, std::span<const double> k) const override { return fn_(x, k); }

 private:
  int dof_;
  Fn fn_;
};

class EmptyInitialState : public std::runtime_error {
 public:
  EmptyInitialState() : std::runtime_error("empty initial state") {}
  explicit EmptyInitialState(const std::string& what) : std::runtime_error(what) {}
};

/// Phase-space volume of one grid cell in the units f is evaluated in: (dx * dk)^dof.
double seeding_cell_volume(const SimConfig& cfg);

/// Deterministic cell-centre seeding: N_k = round(N |f_k| / sum |f|) particles
/// with sign(f_k) in every cell, ids 0, 1, 2, ... in canonical cell order
/// (spatial cells row-major, then momentum index vectors lexicographic).
Ensemble seed_ensemble(const InitialDistribution& f0, std::size_t n_target, const SimConfig& cfg);

}  // namespace mbw
