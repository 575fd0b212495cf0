#pragma once

#include <array>
#include <cstdint>

namespace mbw {

/// Philox4x64-10 (Salmon et al., SC'11): a counter-based generator, so every
/// stream is addressed by (key, counter) and needs no shared state.
using PhiloxBlock = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

namespace detail {

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
  const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

inline PhiloxBlock philox4x64(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ull;
  constexpr std::uint64_t kM1 = 0xCA5A826395121157ull;
  constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ull;
  constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73Bull;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint64_t hi0, lo0, hi1, lo1;
    detail::mulhilo(kM0, ctr[0], hi0, lo0);
    detail::mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

/// 53-bit uniform in [0, 1).
inline double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }
/// 53-bit uniform in (0, 1): midpoints of the [0, 1) lattice.
// 52 bits so that the half-offset stays exactly representable below 1
inline double to_open_unit(std::uint64_t x) { return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52; }

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Id of the birth-th child created by `parent` during time step `step`.
inline std::uint64_t child_id(std::uint64_t parent, std::uint64_t step, std::uint64_t birth) {
  return splitmix64(parent ^ splitmix64(step * 0x100000001B3ull + birth + 0x5851F42D4C957F2Dull));
}

enum class StreamPurpose : std::uint64_t { flight = 0, dissipation = 1 };

/// Random stream of one particle during one time step. Key = (seed, particle
/// id); counter = (step, purpose, block, 0). Streams with different keys or
/// counters never overlap.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t id, std::uint64_t step, StreamPurpose purpose)
      : key_{seed, id}, step_(step), purpose_(static_cast<std::uint64_t>(purpose)) {}

  std::uint64_t next_u64() {
    if (used_ == 4) {
      buffer_ = philox4x64({step_, purpose_, block_++, 0}, key_);
      used_ = 0;
    }
    return buffer_[used_++];
  }
  double uniform() { return to_unit(next_u64()); }
  double uniform_open() { return to_open_unit(next_u64()); }

 private:
  PhiloxKey key_;
  std::uint64_t step_;
  std::uint64_t purpose_;
  std::uint64_t block_ = 0;
  PhiloxBlock buffer_{};
  int used_ = 4;
};

}  // namespace mbw
