#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "mbw/config.hpp"
#include "mbw/phase_space.hpp"

namespace mbw {

enum class ReduceBody { first, second, both };

ReduceBody parse_reduce_body(const std::string& s);  // "1" | "2" | "both"
std::string to_string(ReduceBody b);

/// Signed histogram over a 2-D grid. For the single-body reduction rows are
/// x-cells and columns momentum indices -M_max..M_max; values are scaled so
/// that sum(values) * row_width * col_width == 1.
struct ReducedDistribution {
  Eigen::MatrixXd values;
  double row_width = 0.0;  // dx [nm] (or dp for the momentum-pair plane)
  double col_width = 0.0;  // dp [eV fs / nm]
  double time = 0.0;
  double normalization = 1.0;  // raw signed sum * cell area before scaling
  int m_max = 0;
};

class EmptyDistribution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-body (x, p) distribution. `both` adds every particle's sign at
/// (x^1, M^1) and at (x^2, M^2).
ReducedDistribution reduce(const Ensemble& e, const SimConfig& cfg, ReduceBody body = ReduceBody::both);
/// (M^1, M^2) plane of a two-body ensemble, positions integrated out.
ReducedDistribution reduce_momentum_pair(const Ensemble& e, const SimConfig& cfg);

/// sum max(-f, 0) / sum |f|. Throws EmptyDistribution when all cells are zero.
double negativity(const ReducedDistribution& r);
/// Negativity used as the entanglement metric: momentum-pair plane for two
/// bodies, (x, p) plane for one.
double entanglement_negativity(const Ensemble& e, const SimConfig& cfg);
/// max - min along M of the column containing x_mid.
double oscillation_amplitude(const ReducedDistribution& r, const SimConfig& cfg, double x_mid = 25.0);

/// Text snapshot: header `t=<fs> nx=<int> nm=<int> dx=<nm> dp=<eV.fs/nm>` then
/// `x_index m_index value` rows, row-major; shortest round-trip numbers.
void snapshot_write(const ReducedDistribution& r, std::ostream& os);
void snapshot_write(const ReducedDistribution& r, const std::filesystem::path& path);
ReducedDistribution snapshot_read(std::istream& is);
ReducedDistribution snapshot_read(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

/// One metric-log line: `t nu amplitude particles`.
std::string metric_line(double t, double nu, double amplitude, std::size_t particles);

}  // namespace mbw
