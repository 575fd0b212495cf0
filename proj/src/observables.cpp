#include "mbw/observables.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mbw {

namespace {

ReducedDistribution finish(Eigen::MatrixXd counts, double row_width, double col_width, const Ensemble& e,
                           int m_max) {
  if (e.particles.empty()) throw EmptyDistribution("reduce: empty ensemble");
  const double area = row_width * col_width;
  const double signed_sum = counts.sum();
  if (signed_sum == 0.0) throw EmptyDistribution("reduce: signed histogram sums to zero");
  ReducedDistribution r;
  r.normalization = signed_sum * area;
  r.values = counts / (signed_sum * area);
  r.row_width = row_width;
  r.col_width = col_width;
  r.time = e.t;
  r.m_max = m_max;
  return r;
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("snapshot: bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

ReduceBody parse_reduce_body(const std::string& s) {
  if (s == "1") return ReduceBody::first;
  if (s == "2") return ReduceBody::second;
  if (s == "both") return ReduceBody::both;
  throw std::invalid_argument("reduce.body must be 1, 2 or both (got '" + s + "')");
}

std::string to_string(ReduceBody b) {
  switch (b) {
    case ReduceBody::first: return "1";
    case ReduceBody::second: return "2";
    case ReduceBody::both: return "both";
  }
  return "both";
}

ReducedDistribution reduce(const Ensemble& e, const SimConfig& cfg, ReduceBody body) {
  const int nx = cfg.cells_per_axis();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nx, cfg.momentum_count());
  int lo = 0;
  int hi = cfg.dof();
  if (body == ReduceBody::first) hi = 1;
  if (body == ReduceBody::second) {
    if (cfg.dof() < 2) throw std::invalid_argument("reduce: body 2 needs a two-body ensemble");
    lo = 1;
    hi = 2;
  }
  for (const auto& p : e.particles) {
    for (int i = lo; i < hi; ++i) counts(spatial_cell_of(p.x[i], cfg), p.m[i] + cfg.m_max) += p.sign;
  }
  return finish(std::move(counts), cfg.spatial_cell, cfg.momentum_step(), e, cfg.m_max);
}

ReducedDistribution reduce_momentum_pair(const Ensemble& e, const SimConfig& cfg) {
  if (cfg.dof() != 2) throw std::invalid_argument("reduce_momentum_pair: needs a two-body ensemble");
  const int nm = cfg.momentum_count();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nm, nm);
  for (const auto& p : e.particles) counts(p.m[0] + cfg.m_max, p.m[1] + cfg.m_max) += p.sign;
  return finish(std::move(counts), cfg.momentum_step(), cfg.momentum_step(), e, cfg.m_max);
}

double negativity(const ReducedDistribution& r) {
  const double total = r.values.cwiseAbs().sum();
  if (!(total > 0.0)) throw EmptyDistribution("negativity: all-zero distribution");
  return (-r.values.array()).max(0.0).sum() / total;
}

double entanglement_negativity(const Ensemble& e, const SimConfig& cfg) {
  if (cfg.dof() == 2) return negativity(reduce_momentum_pair(e, cfg));
  return negativity(reduce(e, cfg, ReduceBody::first));
}

double oscillation_amplitude(const ReducedDistribution& r, const SimConfig& cfg, double x_mid) {
  if (!(x_mid >= 0.0 && x_mid <= cfg.domain_length))
    throw std::out_of_range("oscillation_amplitude: x_mid outside the grid");
  const int col = spatial_cell_of(x_mid, cfg);
  if (col < 0 || col >= r.values.rows()) throw std::out_of_range("oscillation_amplitude: x_mid outside the grid");
  const auto row = r.values.row(col);
  return row.maxCoeff() - row.minCoeff();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void snapshot_write(const ReducedDistribution& r, std::ostream& os) {
  os << "t=" << format_double(r.time) << " nx=" << r.values.rows() << " nm=" << r.values.cols()
     << " dx=" << format_double(r.row_width) << " dp=" << format_double(r.col_width) << '\n';
  std::string line;
  for (Eigen::Index i = 0; i < r.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.values.cols(); ++j) {
      line.clear();
      line += std::to_string(i);
      line += ' ';
      line += std::to_string(j);
      line += ' ';
      line += format_double(r.values(i, j));
      line += '\n';
      os << line;
    }
  }
}

void snapshot_write(const ReducedDistribution& r, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("snapshot: cannot open " + path.string() + " for writing");
  snapshot_write(r, os);
  os.flush();
  if (!os) throw std::runtime_error("snapshot: write failed for " + path.string());
}

ReducedDistribution snapshot_read(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("snapshot: missing header");
  std::istringstream hs(header);
  std::string field;
  double t = 0.0, dx = 0.0, dp = 0.0;
  long nx = -1, nm = -1;
  while (hs >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::runtime_error("snapshot: bad header field '" + field + "'");
    const std::string key = field.substr(0, eq);
    const std::string_view val(field.c_str() + eq + 1);
    if (key == "t") t = parse_double(val);
    else if (key == "nx") nx = std::stol(std::string(val));
    else if (key == "nm") nm = std::stol(std::string(val));
    else if (key == "dx") dx = parse_double(val);
    else if (key == "dp") dp = parse_double(val);
    else throw std::runtime_error("snapshot: unknown header key '" + key + "'");
  }
  if (nx <= 0 || nm <= 0) throw std::runtime_error("snapshot: header lacks nx/nm");
  ReducedDistribution r;
  r.values = Eigen::MatrixXd::Zero(nx, nm);
  r.time = t;
  r.row_width = dx;
  r.col_width = dp;
  r.m_max = static_cast<int>((nm - 1) / 2);
  std::string line;
  long rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long i = -1, j = -1;
    std::string v;
    if (!(ls >> i >> j >> v) || i < 0 || i >= nx || j < 0 || j >= nm)
      throw std::runtime_error("snapshot: bad row '" + line + "'");
    r.values(i, j) = parse_double(v);
    ++rows;
  }
  if (rows != nx * nm) throw std::runtime_error("snapshot: expected " + std::to_string(nx * nm) + " rows");
  return r;
}

ReducedDistribution snapshot_read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
  return snapshot_read(is);
}

std::string metric_line(double t, double nu, double amplitude, std::size_t particles) {
  return format_double(t) + ' ' + format_double(nu) + ' ' + format_double(amplitude) + ' ' +
         std::to_string(particles);
}

}  // namespace mbw
