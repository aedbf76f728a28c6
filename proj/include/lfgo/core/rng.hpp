#pragma once

// Counter-based random streams. A stream is identified by a master seed and a
// path of integer indices (replicate, design, sample, ...). The pair is hashed
// into a 128-bit Philox key, so child streams are derived without shared state
// and identical (seed, path) pairs replay bit-identical draws.

#include <array>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace lfgo {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::pair<std::uint32_t, std::uint32_t> mulhilo(std::uint32_t a, std::uint32_t b) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  return {static_cast<std::uint32_t>(p >> 32), static_cast<std::uint32_t>(p)};
}

}  // namespace detail

/// Philox4x32-10 (Salmon et al., SC'11). Satisfies UniformRandomBitGenerator.
class PhiloxEngine {
 public:
  using result_type = std::uint32_t;

  PhiloxEngine(std::uint64_t key, std::uint64_t nonce) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        nonce_{static_cast<std::uint32_t>(nonce), static_cast<std::uint32_t>(nonce >> 32)} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 4) {
      refill();
      pos_ = 0;
    }
    return buffer_[pos_++];
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    const std::uint64_t hi = (*this)();
    const std::uint64_t lo = (*this)();
    return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
  }

  std::uint64_t counter() const noexcept { return counter_; }

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      const auto [hi0, lo0] = detail::mulhilo(kM0, ctr[0]);
      const auto [hi1, lo1] = detail::mulhilo(kM1, ctr[2]);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  void refill() noexcept {
    buffer_ = block({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                     nonce_[0], nonce_[1]},
                    key_);
    ++counter_;
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> nonce_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int pos_ = 4;
};

/// Immutable handle naming one independent random stream.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed)
      : master_seed_(master_seed),
        key_(detail::splitmix64(master_seed ^ 0x6C66676F2D6B6579ULL)),
        nonce_(detail::splitmix64(key_ + 0x632BE59BD9B4E019ULL)) {}

  RngStream child(std::uint64_t index) const {
    RngStream out = *this;
    out.path_.push_back(index);
    const std::uint64_t h = detail::splitmix64(index ^ 0xA0761D6478BD642FULL);
    out.key_ = detail::splitmix64(key_ ^ h);
    out.nonce_ = detail::splitmix64(nonce_ + detail::splitmix64(h ^ 0xE7037ED1A0B428DBULL));
    return out;
  }

  PhiloxEngine engine() const noexcept { return PhiloxEngine(key_, nonce_); }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  friend bool operator==(const RngStream& a, const RngStream& b) noexcept {
    return a.key_ == b.key_ && a.nonce_ == b.nonce_;
  }

 private:
  std::uint64_t master_seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
  std::uint64_t nonce_;
};

}  // namespace lfgo
