#pragma once

#include <array>
#include <cstdint>

namespace mcptest {

// Philox 4x64, 10 rounds (Salmon et al., "Parallel random numbers: as easy
// as 1, 2, 3"). Counter-based: output is a pure function of (counter, key),
// so independent streams are carved out of the counter space instead of
// jumping a shared state. Output matches numpy.random.Philox.
namespace philox {

using Counter = std::array<std::uint64_t, 4>;
using Key = std::array<std::uint64_t, 2>;

inline Counter block(Counter ctr, Key key) {
  constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
  constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
  constexpr std::uint64_t kBump0 = 0x9E3779B97F4A7C15ull;
  constexpr std::uint64_t kBump1 = 0xBB67AE8584CAA73Bull;
  for (int round = 0; round < 10; ++round) {
    const unsigned __int128 p0 = static_cast<unsigned __int128>(kMul0) * ctr[0];
    const unsigned __int128 p1 = static_cast<unsigned __int128>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint64_t>(p1 >> 64) ^ ctr[1] ^ key[0],
           static_cast<std::uint64_t>(p1),
           static_cast<std::uint64_t>(p0 >> 64) ^ ctr[3] ^ key[1],
           static_cast<std::uint64_t>(p0)};
    key[0] += kBump0;
    key[1] += kBump1;
  }
  return ctr;
}

}  // namespace philox

// Stream identifiers group related draws. Keeping domains disjoint means a
// ranking sample can never collide with a permutation draw for the same ids.
enum class StreamDomain : std::uint64_t {
  ranking_sample = 1,   // ids: (rep, topic, system), draw index = position - 1
  topic_choice = 2,     // ids: (rep, 0, 0)
  tukey_permutation = 3,// ids: (iteration, row, 0)
  subsample = 4,        // ids: (size, iteration, 0)
  seed_derivation = 5,  // ids: (purpose, index, 0)
};

// One logical stream of random draws. key = (seed, domain), counter =
// (id0, id1, id2, block). Draw i of a stream is the same no matter how the
// surrounding loops are scheduled.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamDomain domain, std::uint64_t id0 = 0,
            std::uint64_t id1 = 0, std::uint64_t id2 = 0)
      : key_{seed, static_cast<std::uint64_t>(domain)}, ids_{id0, id1, id2} {}

  std::uint64_t u64_at(std::uint64_t index) const {
    const std::uint64_t block_index = index >> 2;
    if (block_index != cached_block_) {
      cache_ = philox::block({ids_[0], ids_[1], ids_[2], block_index}, key_);
      cached_block_ = block_index;
    }
    return cache_[index & 3];
  }

  // Uniform on [0,1) with 53 random bits.
  double double_at(std::uint64_t index) const {
    return static_cast<double>(u64_at(index) >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return u64_at(next_index_++); }
  double next_double() { return double_at(next_index_++); }

  // Unbiased integer in [0, n). Lemire 2019, with rejection.
  std::uint64_t bounded(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = -n % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  philox::Key key_;
  std::array<std::uint64_t, 3> ids_;
  std::uint64_t next_index_ = 0;
  mutable std::uint64_t cached_block_ = ~0ull;
  mutable philox::Counter cache_{};
};

// Stable 64-bit sub-seed for handing to a component that takes a bare seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  return RngStream(seed, StreamDomain::seed_derivation, purpose, index).next_u64();
}

}  // namespace mcptest
