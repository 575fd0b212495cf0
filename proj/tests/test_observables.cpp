#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mbw/initial_state.hpp"
#include "mbw/observables.hpp"

using namespace mbw;

namespace {

SignedParticle at(double x1, double x2, int m1, int m2, int sign = 1) {
  return make_particle(sign, std::array<double, 2>{x1, x2}, std::array<int, 2>{m1, m2});
}

ReducedDistribution grid(std::initializer_list<std::initializer_list<double>> rows) {
  ReducedDistribution r;
  r.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) r.values(i, j++) = v;
    ++i;
  }
  r.row_width = r.col_width = 1.0;
  return r;
}

}  // namespace

TEST_CASE("reduce: both bodies land in their own cells") {
  const SimConfig c;
  Ensemble e;
  e.particles = {at(10.2, 30.2, 3, -5), at(10.3, 30.3, 3, -5), at(10.2, 40.0, 3, 0, -1)};
  const auto r = reduce(e, c, ReduceBody::both);
  const double scale = 1.0 / ((2 + 2 - 1 - 1) * c.body_cell_volume());  // signed sum over both bodies
  CHECK(r.values(20, 3 + 64) == doctest::Approx(1.0 * scale));  // +1 +1 -1
  CHECK(r.values(60, -5 + 64) == doctest::Approx(2.0 * scale));
  CHECK(r.values(80, 64) == doctest::Approx(-1.0 * scale));
  CHECK(r.values.sum() * r.row_width * r.col_width == doctest::Approx(1.0));

  const auto first = reduce(e, c, ReduceBody::first);
  CHECK(first.values(20, 67) == doctest::Approx(1.0 / c.body_cell_volume()));
  const auto second = reduce(e, c, ReduceBody::second);
  CHECK(second.values(80, 64) == doctest::Approx(-1.0 / c.body_cell_volume()));
}

TEST_CASE("reduce rejects empty and cancelling ensembles") {
  const SimConfig c;
  Ensemble e;
  CHECK_THROWS_AS(reduce(e, c), EmptyDistribution);
  e.particles = {at(1.0, 2.0, 0, 0), at(1.0, 2.0, 0, 0, -1)};
  CHECK_THROWS_AS(reduce(e, c), EmptyDistribution);
}

TEST_CASE("negativity examples") {
  CHECK(negativity(grid({{1, 2}, {3, 4}})) == 0.0);
  CHECK(negativity(grid({{1, -1}, {0, 0}})) == doctest::Approx(0.5));
  CHECK(negativity(grid({{3, -1}, {0, 0}})) == doctest::Approx(0.25));
  auto scaled = grid({{3, -1}, {0, 2}});
  const double before = negativity(scaled);
  scaled.values *= 7.5;
  CHECK(negativity(scaled) == doctest::Approx(before).epsilon(1e-15));
  CHECK_THROWS_AS(negativity(grid({{0, 0}})), EmptyDistribution);
}

TEST_CASE("oscillation amplitude reads the column at x_mid") {
  const SimConfig c;
  ReducedDistribution r;
  r.values = Eigen::MatrixXd::Zero(c.cells_per_axis(), c.momentum_count());
  r.values(50, 10) = 2.0;
  r.values(50, 20) = -0.5;
  r.values(49, 0) = 100.0;
  CHECK(oscillation_amplitude(r, c, 25.0) == doctest::Approx(2.5));
  CHECK_THROWS_AS(oscillation_amplitude(r, c, 60.0), std::out_of_range);
  CHECK_THROWS_AS(oscillation_amplitude(r, c, -1.0), std::out_of_range);
}

TEST_CASE("reduce body parsing") {
  CHECK(parse_reduce_body("1") == ReduceBody::first);
  CHECK(parse_reduce_body("2") == ReduceBody::second);
  CHECK(parse_reduce_body("both") == ReduceBody::both);
  CHECK_THROWS_AS(parse_reduce_body("3"), std::invalid_argument);
  CHECK(to_string(ReduceBody::second) == "2");
}

TEST_CASE("snapshot round trip is bit-exact") {
  const SimConfig c;
  ReducedDistribution r;
  r.values = Eigen::MatrixXd::Zero(c.cells_per_axis(), c.momentum_count());
  for (Eigen::Index i = 0; i < r.values.rows(); ++i)
    for (Eigen::Index j = 0; j < r.values.cols(); ++j) r.values(i, j) = std::sin(0.37 * i + 1.3 * j) / 3.0;
  r.values(3, 4) = 1e-300;
  r.values(5, 6) = -0.0;
  r.time = 0.35;
  r.row_width = c.spatial_cell;
  r.col_width = c.momentum_step();
  std::stringstream ss;
  snapshot_write(r, ss);
  const std::string text = ss.str();
  CHECK(text.rfind("t=0.35 nx=100 nm=129 dx=0.5 dp=", 0) == 0);
  long lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == 1 + 100 * 129);

  const auto back = snapshot_read(ss);
  CHECK(back.time == r.time);
  CHECK(back.row_width == r.row_width);
  CHECK(back.col_width == r.col_width);
  CHECK(back.m_max == 64);
  CHECK((back.values.array() == r.values.array()).all());
  CHECK(std::signbit(back.values(5, 6)));
}

TEST_CASE("snapshot reader rejects truncated files") {
  std::stringstream ss("t=0 nx=2 nm=1 dx=1 dp=1\n0 0 1\n");
  CHECK_THROWS_AS(snapshot_read(ss), std::runtime_error);
  std::stringstream bad("t=0 nx=1 nm=1 dx=1 dp=1\n0 0 zz\n");
  CHECK_THROWS_AS(snapshot_read(bad), std::runtime_error);
}

TEST_CASE("metric line format") {
  CHECK(metric_line(0.05, 0.25, 1.5, 42) == "0.05 0.25 1.5 42");
  CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
}

// Initial entanglement metric against a direct sum over the grid of f0.
TEST_CASE("initial momentum-pair negativity matches the grid oracle") {
  const SimConfig c;
  EntangledParams p;
  p.sigma_ent_x = 2.5;
  p.sigma_ent_p = 1.5;
  const auto f = EntangledDistribution::normalized(p, c);
  const auto e = seed_ensemble(f, 500'000, c);
  const double nu = entanglement_negativity(e, c);

  const int nx = c.cells_per_axis(), nm = c.momentum_count();
  const double dk = c.wavenumber_step();
  Eigen::MatrixXd pair = Eigen::MatrixXd::Zero(nm, nm);
  for (int i1 = 0; i1 < nx; ++i1)
    for (int i2 = 0; i2 < nx; ++i2)
      for (int m1 = 0; m1 < nm; ++m1)
        for (int m2 = 0; m2 < nm; ++m2)
          pair(m1, m2) += eval_entangled_f0(c.cell_center(i1), c.cell_center(i2), (m1 - c.m_max) * dk,
                                            (m2 - c.m_max) * dk, f.params(), dk);
  const double oracle = (-pair.array()).max(0.0).sum() / pair.cwiseAbs().sum();
  MESSAGE("nu0 = " << nu << ", grid oracle = " << oracle);
  CHECK(oracle > 0.1);
  // cells rounding to zero particles shift the seeded value slightly
  CHECK(std::abs(nu - oracle) < 0.02);
}

TEST_CASE("entangled state is mirror symmetric under x -> L - x, k -> -k") {
  const SimConfig c;
  EntangledParams p;
  const auto f = EntangledDistribution::normalized(p, c);
  const auto e = seed_ensemble(f, 200'000, c);
  const auto r = reduce(e, c, ReduceBody::both);
  const int nx = c.cells_per_axis(), nm = c.momentum_count();
  double worst = 0.0;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nm; ++j)
      worst = std::max(worst, std::abs(r.values(i, j) - r.values(nx - 1 - i, nm - 1 - j)));
  CHECK(worst <= 1e-12 * r.values.cwiseAbs().maxCoeff());
}

TEST_CASE("single-body reduction of a product state follows the analytic marginal") {
  SimConfig c;
  c.n_bodies = 1;
  const double x0 = 20.0, k0 = 4 * c.wavenumber_step(), sx = 2.0, sk = 0.3;
  FunctionDistribution f(1, [&](std::span<const double> x, std::span<const double> k) {
    return std::exp(-std::pow((x[0] - x0) / sx, 2) - std::pow((k[0] - k0) / sk, 2));
  });
  const std::size_t n = 1'000'000;
  const auto e = seed_ensemble(f, n, c);
  const auto r = reduce(e, c, ReduceBody::first);
  const int nx = c.cells_per_axis(), nm = c.momentum_count();
  Eigen::MatrixXd exact(nx, nm);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nm; ++j) {
      const double x = c.cell_center(i), k = (j - c.m_max) * c.wavenumber_step();
      exact(i, j) = std::exp(-std::pow((x - x0) / sx, 2) - std::pow((k - k0) / sk, 2));
    }
  exact /= exact.sum() * c.body_cell_volume();
  const double l1 = (r.values - exact).cwiseAbs().sum() * c.body_cell_volume();
  // every cell is off by at most half a particle
  const double bound = static_cast<double>(nx * nm) * 0.5 / static_cast<double>(n) * 2.0;
  MESSAGE("2-D reduce L1 vs analytic = " << l1);
  CHECK(l1 < bound);
}
