#include "mbw/wigner_kernel.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "mbw/parallel.hpp"

namespace mbw {

struct KernelTable::Impl {
  SimConfig cfg;
  bool all_zero = false;
  bool lazy = false;
  std::vector<Row> rows;

  // lazy mode: rows computed on first use
  std::unique_ptr<std::once_flag[]> once;
  std::optional<Potential> potential;
  std::optional<KernelQuadrature> quad;
  KernelOptions opt;
  std::vector<Eigen::VectorXd> single_body_rows;  // separable potentials only
};

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'B', 'W', 'K', 'T', 'B', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

std::vector<double> cell_center_coords(std::size_t cell, const SimConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.cells_per_axis());
  std::vector<double> x(static_cast<std::size_t>(cfg.dof()));
  for (std::size_t i = x.size(); i-- > 0;) {
    x[i] = cfg.cell_center(static_cast<int>(cell % n));
    cell /= n;
  }
  return x;
}

int nominal_intervals(const SimConfig& cfg, const KernelOptions& opt) {
  const double exact = opt.points_per_cell * cfg.coherence_length / cfg.spatial_cell;
  return std::max(1, static_cast<int>(std::ceil(exact - 1e-9)));
}

// Tensor grids grow with the square of the node count.
constexpr Eigen::Index kMaxNodes2d = 2049;

KernelError not_converged(long cell, double estimate, const KernelOptions& opt) {
  std::ostringstream msg;
  msg << "kernel quadrature did not converge in cell " << cell << ": error estimate " << estimate
      << " exceeds tolerance " << opt.tolerance;
  return KernelError(cell, estimate, msg.str());
}

// trapezoid(level) returns the level's composite trapezoid row.
template <class Trapezoid>
Eigen::VectorXd romberg(Trapezoid&& trapezoid, int levels, long cell, const KernelOptions& opt) {
  std::vector<Eigen::VectorXd> prev{trapezoid(0)};
  double estimate = std::numeric_limits<double>::infinity();
  for (int l = 1; l <= levels; ++l) {
    std::vector<Eigen::VectorXd> cur{trapezoid(l)};
    double factor = 1.0;
    for (int j = 1; j <= l; ++j) {
      factor *= 4.0;
      cur.push_back(cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (factor - 1.0));
    }
    estimate = (cur.back() - prev.back()).cwiseAbs().maxCoeff();
    if (estimate <= opt.tolerance) return cur.back();
    prev = std::move(cur);
  }
  throw not_converged(cell, estimate, opt);
}

Eigen::VectorXd level_weights(const KernelQuadrature& quad, int level) {
  const Eigen::Index n = quad.base_intervals * (Eigen::Index{1} << level);
  const double h = quad.finest_step * static_cast<double>(quad.stride(level));
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n + 1, h);
  w[0] = w[n] = 0.5 * h;
  return w;
}

Eigen::VectorXd row_1d(const Potential& v, double x, const SimConfig& cfg, const KernelQuadrature& quad,
                       const KernelOptions& opt, long cell) {
  const Eigen::Index ns = quad.nodes.size();
  Eigen::VectorXd diff(ns);
  for (Eigen::Index j = 0; j < ns; ++j) {
    const double plus = x + quad.nodes[j];
    const double minus = x - quad.nodes[j];
    diff[j] = v(std::span<const double>(&plus, 1)) - v(std::span<const double>(&minus, 1));
  }
  const double scale = -1.0 / (cfg.hbar * cfg.coherence_length);
  auto trapezoid = [&](int level) {
    const auto pick = Eigen::seq(0, ns - 1, quad.stride(level));
    const Eigen::VectorXd d = diff(pick).cwiseProduct(level_weights(quad, level));
    const Eigen::MatrixXd s = quad.sin_t(Eigen::all, pick);
    return Eigen::VectorXd(scale * (s * d));
  };
  return romberg(trapezoid, quad.levels, cell, opt);
}

Eigen::VectorXd row_2d(const Potential& v, std::span<const double> x, const SimConfig& cfg,
                       const KernelQuadrature& quad, const KernelOptions& opt, long cell) {
  const double scale = -1.0 / (cfg.hbar * cfg.coherence_length * cfg.coherence_length);
  auto trapezoid = [&](int level) {
    const auto pick = Eigen::seq(0, quad.nodes.size() - 1, quad.stride(level));
    const Eigen::VectorXd s_nodes = quad.nodes(pick);
    const Eigen::VectorXd w = level_weights(quad, level);
    const Eigen::Index ns = s_nodes.size();
    Eigen::MatrixXd diff(ns, ns);
    std::array<double, 2> plus{};
    std::array<double, 2> minus{};
    for (Eigen::Index l = 0; l < ns; ++l) {
      for (Eigen::Index j = 0; j < ns; ++j) {
        plus = {x[0] + s_nodes[j], x[1] + s_nodes[l]};
        minus = {x[0] - s_nodes[j], x[1] - s_nodes[l]};
        diff(j, l) = (v(plus) - v(minus)) * w[j] * w[l];
      }
    }
    const Eigen::MatrixXd sn = quad.sin_t(Eigen::all, pick);
    const Eigen::MatrixXd cs = quad.cos_t(Eigen::all, pick);
    // Im[(C - iS) D (C - iS)^T] = -(S D C^T + C D S^T)
    Eigen::MatrixXd k = sn * diff * cs.transpose() + cs * diff * sn.transpose();
    k *= scale;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> row_major = k;
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(row_major.data(), row_major.size()));
  };
  return romberg(trapezoid, quad.levels, cell, opt);
}

Eigen::VectorXd separable_row(const Eigen::VectorXd& r1, const Eigen::VectorXd& r2, const SimConfig& cfg) {
  const Eigen::Index nm = cfg.momentum_count();
  const Eigen::Index zero = cfg.m_max;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(nm * nm);
  for (Eigen::Index m = 0; m < nm; ++m) {
    row[m * nm + zero] += r1[m];
    row[zero * nm + m] += r2[m];
  }
  return row;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
std::uint64_t get_le(std::istream& is, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw std::runtime_error("kernel cache: truncated file");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

KernelQuadrature::KernelQuadrature(const SimConfig& cfg, const KernelOptions& opt) {
  if (opt.points_per_cell < 1 || opt.max_refinements < 1)
    throw std::invalid_argument("KernelQuadrature: points_per_cell and max_refinements must be >= 1");
  base_intervals = nominal_intervals(cfg, opt);
  levels = opt.max_refinements;
  if (cfg.dof() == 2)
    while (levels > 1 && base_intervals * (Eigen::Index{1} << levels) + 1 > kMaxNodes2d) --levels;
  const Eigen::Index n = base_intervals * (Eigen::Index{1} << levels);
  finest_step = cfg.coherence_length / static_cast<double>(n);
  nodes.resize(n + 1);
  // (2j - n) h / 2 keeps the node set exactly symmetric about s = 0
  for (Eigen::Index j = 0; j <= n; ++j) nodes[j] = static_cast<double>(2 * j - n) * (0.5 * finest_step);

  const Eigen::Index nm = cfg.momentum_count();
  sin_t.resize(nm, n + 1);
  if (cfg.dof() == 2) cos_t.resize(nm, n + 1);
  const double two_pi_over_l = 2.0 * std::numbers::pi / cfg.coherence_length;
  for (Eigen::Index i = 0; i < nm; ++i) {
    const double m = static_cast<double>(i - cfg.m_max);
    for (Eigen::Index j = 0; j <= n; ++j) {
      const double phase = two_pi_over_l * m * nodes[j];
      sin_t(i, j) = std::sin(phase);
      if (cfg.dof() == 2) cos_t(i, j) = std::cos(phase);
    }
  }
}

Eigen::VectorXd kernel_row(const Potential& v, std::span<const double> x, const SimConfig& cfg,
                           const KernelQuadrature& quad, const KernelOptions& opt, long cell) {
  if (static_cast<int>(x.size()) != cfg.dof() || v.bodies() != cfg.n_bodies)
    throw std::invalid_argument("kernel_row: dimension mismatch");
  if (!inside_domain(x, cfg)) throw std::out_of_range("kernel_row: position outside the domain");
  if (v.is_zero()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.offset_count()));
  switch (cfg.dof()) {
    case 1:
      return row_1d(v, x[0], cfg, quad, opt, cell);
    case 2:
      return row_2d(v, x, cfg, quad, opt, cell);
    default:
      throw std::invalid_argument("kernel_row: only n*d <= 2 is supported");
  }
}

Eigen::VectorXd kernel_row(const Potential& v, std::span<const double> x, const SimConfig& cfg,
                           const KernelOptions& opt, long cell) {
  const KernelQuadrature quad(cfg, opt);
  return kernel_row(v, x, cfg, quad, opt, cell);
}

MomentumIndices offset_from_index(std::size_t index, const SimConfig& cfg) {
  const auto nm = static_cast<std::size_t>(cfg.momentum_count());
  MomentumIndices m(cfg.dof());
  for (int i = cfg.dof(); i-- > 0;) {
    m[i] = static_cast<int>(index % nm) - cfg.m_max;
    index /= nm;
  }
  return m;
}

std::size_t index_from_offset(const MomentumIndices& offset, const SimConfig& cfg) {
  const auto nm = static_cast<std::size_t>(cfg.momentum_count());
  std::size_t index = 0;
  for (Eigen::Index i = 0; i < offset.size(); ++i)
    index = index * nm + static_cast<std::size_t>(offset[i] + cfg.m_max);
  return index;
}

const SimConfig& KernelTable::config() const { return impl_->cfg; }
bool KernelTable::all_zero() const { return impl_->all_zero; }
bool KernelTable::lazy() const { return impl_->lazy; }
std::size_t KernelTable::cell_count() const { return impl_->rows.size(); }
double KernelTable::gamma_of_cell(std::size_t cell) const { return row(cell).gamma; }
std::span<const KernelTable::Entry> KernelTable::entries(std::size_t cell) const { return row(cell).entries; }

KernelTable::Row KernelTable::make_row(const Eigen::VectorXd& kernel) {
  Row row;
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < kernel.size(); ++i) {
    if (kernel[i] > 0.0) {
      cumulative += kernel[i];
      row.entries.push_back({static_cast<std::uint32_t>(i), kernel[i], cumulative});
    }
  }
  row.gamma = cumulative;
  for (auto& e : row.entries) e.cdf /= cumulative;
  if (!row.entries.empty()) row.entries.back().cdf = 1.0;
  return row;
}

const KernelTable::Row& KernelTable::row(std::size_t cell) const {
  if (!impl_) throw std::logic_error("KernelTable: not built");
  if (cell >= impl_->rows.size()) throw std::out_of_range("KernelTable: cell index out of range");
  if (impl_->lazy) {
    Impl& im = *impl_;
    std::call_once(im.once[cell], [&im, cell] {
      if (!im.single_body_rows.empty()) {
        const auto n = static_cast<std::size_t>(im.cfg.cells_per_axis());
        im.rows[cell] = make_row(separable_row(im.single_body_rows[cell / n], im.single_body_rows[cell % n], im.cfg));
      } else {
        const auto x = cell_center_coords(cell, im.cfg);
        im.rows[cell] = make_row(kernel_row(*im.potential, x, im.cfg, *im.quad, im.opt, static_cast<long>(cell)));
      }
    });
  }
  return impl_->rows[cell];
}

Eigen::VectorXd KernelTable::positive_row(std::size_t cell) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(impl_->cfg.offset_count()));
  for (const auto& e : entries(cell)) out[e.offset] = e.value;
  return out;
}

MomentumIndices KernelTable::sample_in_cell(std::size_t cell, double u) const {
  const auto& r = row(cell);
  if (r.entries.empty()) throw std::domain_error("sample_offset: no creation possible here (gamma = 0)");
  auto it = std::upper_bound(r.entries.begin(), r.entries.end(), u,
                             [](double value, const Entry& e) { return value < e.cdf; });
  if (it == r.entries.end()) --it;
  return offset_from_index(it->offset, impl_->cfg);
}

KernelTable build_table(const Potential& v, const SimConfig& cfg, const KernelOptions& opt) {
  cfg.validate();
  if (v.bodies() != cfg.n_bodies) throw std::invalid_argument("build_table: potential/body count mismatch");

  KernelTable table;
  table.impl_ = std::make_shared<KernelTable::Impl>();
  auto& im = *table.impl_;
  im.cfg = cfg;
  im.opt = opt;
  const std::size_t cells = cfg.spatial_cells();
  im.rows.resize(cells);
  if (v.is_zero()) {
    im.all_zero = true;
    return table;
  }

  const int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const bool separable = cfg.n_bodies == 2 && v.single_body_term() != nullptr;

  if (separable) {
    SimConfig single = cfg;
    single.n_bodies = 1;
    const KernelQuadrature quad1(single, opt);
    const auto n = static_cast<std::size_t>(cfg.cells_per_axis());
    im.single_body_rows.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      const double x = cfg.cell_center(static_cast<int>(c));
      im.single_body_rows[c] =
          kernel_row(*v.single_body_term(), std::span<const double>(&x, 1), single, quad1, opt, static_cast<long>(c));
    }
  }

  // Positive entries are ~half of all offsets for a generic row; separable rows
  // have at most 2 * momentum_count().
  const std::size_t per_row = separable ? 2 * static_cast<std::size_t>(cfg.momentum_count())
                                        : cfg.offset_count() / 2 + 1;
  const std::size_t estimate = cells * per_row * sizeof(KernelTable::Entry);
  std::optional<KernelQuadrature> quad;
  if (!separable) quad.emplace(cfg, opt);
  if (estimate > opt.memory_budget) {
    im.lazy = true;
    im.once = std::make_unique<std::once_flag[]>(cells);
    im.potential.emplace(v);
    if (quad) im.quad.emplace(*quad);
    return table;
  }

  parallel_chunks(cells, threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      if (separable) {
        const auto n = static_cast<std::size_t>(cfg.cells_per_axis());
        im.rows[c] = KernelTable::make_row(separable_row(im.single_body_rows[c / n], im.single_body_rows[c % n], cfg));
      } else {
        const auto x = cell_center_coords(c, cfg);
        im.rows[c] = KernelTable::make_row(kernel_row(v, x, cfg, *quad, opt, static_cast<long>(c)));
      }
    }
  });
  return table;
}

double gamma(const KernelTable& table, std::span<const double> x) {
  if (!inside_domain(x, table.config())) throw std::out_of_range("gamma: position outside the domain");
  if (table.all_zero()) return 0.0;
  return table.gamma_of_cell(flat_spatial_cell(x, table.config()));
}

MomentumIndices sample_offset(const KernelTable& table, std::span<const double> x, double u) {
  if (!inside_domain(x, table.config())) throw std::out_of_range("sample_offset: position outside the domain");
  return table.sample_in_cell(flat_spatial_cell(x, table.config()), u);
}

std::uint64_t table_hash(const Potential& v, const SimConfig& cfg, const KernelOptions& opt) {
  std::ostringstream os;
  os.precision(17);
  os << v.name() << '|' << cfg.n_bodies << '|' << cfg.dims << '|' << cfg.domain_length << '|'
     << cfg.spatial_cell << '|' << cfg.coherence_length << '|' << cfg.m_max << '|' << cfg.hbar << '|'
     << opt.points_per_cell << '|' << opt.tolerance << '|' << opt.max_refinements;
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_table(const KernelTable& table, const std::filesystem::path& path, std::uint64_t hash) {
  const auto& cfg = table.config();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("kernel cache: cannot open " + path.string());
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(cfg.dof()));
  put_u64(os, hash);
  put_u64(os, table.cell_count());
  put_u64(os, cfg.offset_count());
  for (std::size_t c = 0; c < table.cell_count(); ++c) {
    const Eigen::VectorXd row = table.all_zero()
                                    ? Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.offset_count()))
                                    : table.positive_row(c);
    for (double v : row) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw std::runtime_error("kernel cache: write failed for " + path.string());
}

KernelTable load_table(const std::filesystem::path& path, const SimConfig& cfg, std::uint64_t hash) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("kernel cache: cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("kernel cache: bad magic");
  if (get_le(is, 4) != kVersion) throw std::runtime_error("kernel cache: unsupported version");
  if (get_le(is, 4) != static_cast<std::uint64_t>(cfg.dof())) throw std::runtime_error("kernel cache: dof mismatch");
  if (get_le(is, 8) != hash) throw std::runtime_error("kernel cache: hash mismatch");
  const std::uint64_t cells = get_le(is, 8);
  const std::uint64_t offsets = get_le(is, 8);
  if (cells != cfg.spatial_cells() || offsets != cfg.offset_count())
    throw std::runtime_error("kernel cache: shape mismatch");

  KernelTable table;
  table.impl_ = std::make_shared<KernelTable::Impl>();
  auto& im = *table.impl_;
  im.cfg = cfg;
  im.rows.resize(cells);
  bool any = false;
  Eigen::VectorXd row(static_cast<Eigen::Index>(offsets));
  for (std::uint64_t c = 0; c < cells; ++c) {
    for (std::uint64_t i = 0; i < offsets; ++i) row[static_cast<Eigen::Index>(i)] = std::bit_cast<double>(get_le(is, 8));
    im.rows[c] = KernelTable::make_row(row);
    any = any || im.rows[c].gamma > 0.0;
  }
  im.all_zero = !any;
  return table;
}

}  // namespace mbw
