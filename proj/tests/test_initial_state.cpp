#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "mbw/initial_state.hpp"

using namespace mbw;

namespace {

constexpr double kDk = std::numbers::pi / 30.0;

EntangledParams reference_params() {
  EntangledParams p;  // x1 = 15, x2 = 35, sigma_x = 3, sigma_p = 1/3, sigma_0 = 0.75
  p.sigma_ent_x = 2.5;
  p.sigma_ent_p = 1.5;
  return p;
}

double product_term(double x1, double x2, double k1, double k2, const EntangledParams& p) {
  auto g = [](double v, double c, double s) { return std::exp(-((v - c) / s) * ((v - c) / s)); };
  return p.c * g(x1, p.x1, p.sigma_x1) * g(k1, p.p1, p.sigma_p1) * g(x2, p.x2, p.sigma_x2) * g(k2, p.p2, p.sigma_p2);
}

}  // namespace

TEST_CASE("entangled f0 at the centre equals C") {
  auto p = reference_params();
  p.c = 2.7;
  CHECK(eval_entangled_f0(15.0, 35.0, 0.0, 0.0, p, kDk) == doctest::Approx(2.7).epsilon(1e-15));
}

TEST_CASE("cross term vanishes where the sine does") {
  const auto p = reference_params();
  const double k1 = std::numbers::pi * p.sigma_ent_p * kDk;
  CHECK(eval_entangled_f0(15.0, 35.0, k1, 0.0, p, kDk) ==
        doctest::Approx(product_term(15.0, 35.0, k1, 0.0, p)).epsilon(1e-12));
}

TEST_CASE("cross term is odd in k1 - k1_0") {
  const auto p = reference_params();
  const double x1 = 15.7, x2 = 34.1, k1 = 0.23, k2 = -0.31;
  const double plus = eval_entangled_f0(x1, x2, k1, k2, p, kDk) - product_term(x1, x2, k1, k2, p);
  const double minus = eval_entangled_f0(x1, x2, -k1, k2, p, kDk) - product_term(x1, x2, -k1, k2, p);
  CHECK(plus != 0.0);
  CHECK(minus == doctest::Approx(-plus).epsilon(1e-12));
}

TEST_CASE("product term is separable, the full function is not") {
  auto p = reference_params();
  const std::array<double, 4> a{14.0, 36.0, 0.2, -0.15};
  const std::array<double, 4> b{16.5, 33.0, -0.1, 0.3};
  auto f = [&p](double x1, double x2, double k1, double k2) { return eval_entangled_f0(x1, x2, k1, k2, p, kDk); };
  auto swapped_gap = [&] {
    const double lhs = f(a[0], a[1], a[2], a[3]) * f(b[0], b[1], b[2], b[3]);
    const double rhs = f(a[0], b[1], a[2], b[3]) * f(b[0], a[1], b[2], a[3]);
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
  };
  CHECK(swapped_gap() > 1e-3);
  p.sigma_ent_x = 1e-3;  // cross term underflows away from the centres
  CHECK(swapped_gap() < 1e-12);
}

TEST_CASE("ferry pair limiting values") {
  FerryPairParams p;
  p.center = 25.0;
  p.x0 = 8.0;
  p.sigma = 1.0;
  const double h = 2.0 * std::numbers::pi;
  CHECK(eval_ferry_pair(25.0, 0.0, p) == doctest::Approx(2.0 / h).epsilon(1e-10));
  const double k = std::numbers::pi / p.x0;
  CHECK(eval_ferry_pair(25.0, k, p) ==
        doctest::Approx(-2.0 / h * std::exp(-2.0 * p.sigma * p.sigma * k * k)).epsilon(1e-10));
}

TEST_CASE("ferry pair p-marginal is |psi_T|^2 away from the overlap") {
  FerryPairParams p;
  p.center = 25.0;
  p.x0 = 10.0;
  p.p0 = 0.8;
  p.sigma = 1.0;
  const double s2 = p.sigma * p.sigma;
  auto psi2 = [&](double x) {
    const double r = x - p.center;
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * s2);
    return 0.5 * norm * (std::exp(-(r - p.x0) * (r - p.x0) / (2 * s2)) + std::exp(-(r + p.x0) * (r + p.x0) / (2 * s2)));
  };
  const double dk = 1e-3;
  for (double x : {13.0, 15.0, 16.2, 34.0, 35.0, 37.5}) {
    double marginal = 0.0;
    for (double k = -20.0; k <= 20.0; k += dk) marginal += eval_ferry_pair(x, k, p) * dk;
    CHECK(marginal == doctest::Approx(psi2(x)).epsilon(1e-6));
  }
}

TEST_CASE("seeding places a delta cell exactly") {
  SimConfig c;
  c.n_bodies = 1;
  c.m_max = 4;
  const double xc = c.cell_center(17);
  const double kc = 2 * c.wavenumber_step();
  FunctionDistribution f(1, [&](std::span<const double> x, std::span<const double> k) {
    return std::abs(x[0] - xc) < 1e-12 && std::abs(k[0] - kc) < 1e-12 ? 3.0 : 0.0;
  });
  const auto e = seed_ensemble(f, 1000, c);
  REQUIRE(e.particles.size() == 1000u);
  for (std::size_t i = 0; i < e.particles.size(); ++i) {
    CHECK(e.particles[i].sign == 1);
    CHECK(e.particles[i].x[0] == xc);
    CHECK(e.particles[i].m[0] == 2);
    CHECK(e.particles[i].id == i);
  }
  CHECK(e.normalization == doctest::Approx(3.0 * seeding_cell_volume(c)));
}

TEST_CASE("seeding symmetric signed cells gives equal counts") {
  SimConfig c;
  c.n_bodies = 1;
  c.m_max = 3;
  FunctionDistribution f(1, [&](std::span<const double> x, std::span<const double> k) {
    if (spatial_cell_of(x[0], c) != 40 || std::abs(k[0]) > 1e-12) return 0.0;
    return 1.0;
  });
  FunctionDistribution g(1, [&](std::span<const double> x, std::span<const double> k) {
    if (std::abs(k[0]) > 1e-12) return 0.0;
    if (spatial_cell_of(x[0], c) == 40) return 1.0;
    if (spatial_cell_of(x[0], c) == 60) return -1.0;
    return 0.0;
  });
  const auto e = seed_ensemble(g, 1001, c);
  long plus = 0, minus = 0;
  for (const auto& p : e.particles) (p.sign > 0 ? plus : minus) += 1;
  CHECK(std::abs(plus - minus) <= 1);
  CHECK(seed_ensemble(f, 10, c).particles.size() == 10u);
}

TEST_CASE("all-zero initial state is rejected") {
  SimConfig c;
  c.n_bodies = 1;
  FunctionDistribution zero(1, [](std::span<const double>, std::span<const double>) { return 0.0; });
  CHECK_THROWS_AS(seed_ensemble(zero, 100, c), EmptyInitialState);
}

TEST_CASE("normalized entangled distribution has unit grid integral") {
  const SimConfig c;
  const auto f = EntangledDistribution::normalized(reference_params(), c);
  const auto e = seed_ensemble(f, 100000, c);
  CHECK(e.normalization == doctest::Approx(1.0).epsilon(1e-12));
}

// The per-cell rounding rule bounds the seeding error; it does not reach
// 2 / sqrt(N) on the full 4-D grid (cells with N |f| / S < 1/2 are empty).
TEST_CASE("entangled seeding: counts obey the rounding rule and are deterministic") {
  const SimConfig c;
  const auto f = EntangledDistribution::normalized(reference_params(), c);
  const std::size_t n = 500'000;
  const auto e = seed_ensemble(f, n, c);
  const auto again = seed_ensemble(f, n, c);
  REQUIRE(e.particles.size() == again.particles.size());
  bool identical = true;
  for (std::size_t i = 0; i < e.particles.size(); ++i) {
    const auto& a = e.particles[i];
    const auto& b = again.particles[i];
    identical = identical && a.sign == b.sign && a.x == b.x && a.m == b.m && a.id == b.id;
  }
  CHECK(identical);

  // direct evaluation of f on the grid, independent of the block evaluator
  const auto& p = f.params();
  const int nx = c.cells_per_axis(), nm = c.momentum_count();
  auto f_at = [&](int i1, int i2, int m1, int m2) {
    return eval_entangled_f0(c.cell_center(i1), c.cell_center(i2), (m1 - c.m_max) * c.wavenumber_step(),
                             (m2 - c.m_max) * c.wavenumber_step(), p, c.wavenumber_step());
  };
  double abs_sum = 0.0;
  for (int i1 = 0; i1 < nx; ++i1)
    for (int i2 = 0; i2 < nx; ++i2)
      for (int m1 = 0; m1 < nm; ++m1)
        for (int m2 = 0; m2 < nm; ++m2) abs_sum += std::abs(f_at(i1, i2, m1, m2));
  std::map<std::uint64_t, long> hist;
  for (const auto& q : e.particles) hist[cell_key(q, c)] += q.sign;
  double l1 = 0.0, bound = 0.0;
  long worst_violation = 0;
  std::size_t nonzero = 0;
  for (int i1 = 0; i1 < nx; ++i1)
    for (int i2 = 0; i2 < nx; ++i2)
      for (int m1 = 0; m1 < nm; ++m1)
        for (int m2 = 0; m2 < nm; ++m2) {
          const std::uint64_t key =
              ((static_cast<std::uint64_t>(i1) * nx + i2) * nm + m1) * static_cast<std::uint64_t>(nm) + m2;
          const auto it = hist.find(key);
          const long count = it == hist.end() ? 0 : it->second;
          const double expected = n * f_at(i1, i2, m1, m2) / abs_sum;
          if (std::abs(count - expected) > 0.5 + 1e-9) ++worst_violation;
          if (std::abs(expected) > 0.0) ++nonzero;
          l1 += std::abs(count - expected) / static_cast<double>(n);
          bound += std::min(0.5, std::abs(expected)) / static_cast<double>(n);
        }
  CHECK(worst_violation == 0);
  CHECK(l1 <= bound + 1e-12);
  const auto placed = static_cast<double>(e.particles.size());
  CHECK(std::abs(placed - static_cast<double>(n)) <= static_cast<double>(nonzero));
  MESSAGE("4-D seeding L1 = " << l1 << " (rounding bound " << bound << ", 2/sqrt(N) = " << 2.0 / std::sqrt(n)
                              << "), placed " << e.particles.size() << " of " << n);
}
