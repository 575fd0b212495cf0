#include <doctest.h>

#include <cmath>
#include <set>

#include "mbw/rng.hpp"

using namespace mbw;

// Known answers of the reference Philox4x64-10 implementation.
TEST_CASE("philox4x64-10 known answers") {
  CHECK(philox4x64({0, 0, 0, 0}, {0, 0}) ==
        PhiloxBlock{0x16554d9eca36314cull, 0xdb20fe9d672d0fdcull, 0xd7e772cee186176bull, 0x7e68b68aec7ba23bull});
  CHECK(philox4x64({0xffffffffffffffffull, 0xffffffffffffffffull, 0xffffffffffffffffull, 0xffffffffffffffffull},
                   {0xffffffffffffffffull, 0xffffffffffffffffull}) ==
        PhiloxBlock{0x87b092c3013fe90bull, 0x438c3c67be8d0224ull, 0x9cc7d7c69cd777b6ull, 0xa09caebf594f0ba0ull});
  CHECK(philox4x64({0x243f6a8885a308d3ull, 0x13198a2e03707344ull, 0xa4093822299f31d0ull, 0x082efa98ec4e6c89ull},
                   {0x452821e638d01377ull, 0xbe5466cf34e90c6cull}) ==
        PhiloxBlock{0xa528f45403e61d95ull, 0x38c72dbd566e9788ull, 0xa5a1610e72fd18b5ull, 0x57bd43b5e52b7fe6ull});
}

TEST_CASE("uniform conversions stay in range") {
  CHECK(to_unit(0) == 0.0);
  CHECK(to_unit(~0ull) < 1.0);
  CHECK(to_open_unit(0) > 0.0);
  CHECK(to_open_unit(~0ull) < 1.0);
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(7, 11, 3, StreamPurpose::flight);
  RngStream b(7, 11, 3, StreamPurpose::flight);
  RngStream c(7, 12, 3, StreamPurpose::flight);
  RngStream d(7, 11, 3, StreamPurpose::dissipation);
  for (int i = 0; i < 9; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
    CHECK(x != d.next_u64());
  }
}

TEST_CASE("stream uniforms have the right mean and variance") {
  RngStream s(1, 2, 3, StreamPurpose::flight);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  CHECK(std::abs(mean - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(sum2 / n - mean * mean == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("child ids do not collide in a large family") {
  std::set<std::uint64_t> ids;
  for (std::uint64_t parent = 0; parent < 100; ++parent)
    for (std::uint64_t step = 0; step < 50; ++step)
      for (std::uint64_t birth = 0; birth < 10; ++birth) ids.insert(child_id(parent, step, birth));
  CHECK(ids.size() == 50000u);
}
