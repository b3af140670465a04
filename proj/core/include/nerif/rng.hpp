#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace nerif {

/// Generator identity recorded in run configs so that a split or an oracle
/// draw can be reproduced later. std::shuffle and std::*_distribution are
/// implementation-defined, so shuffling and bounded draws are spelled out
/// here on top of the (standardized) mt19937_64 stream.
inline constexpr std::string_view kRngVersion = "nerif-rng/1 mt19937_64+fisher-yates";

/// splitmix64 finalizer; used to fold several seed components into one.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept;

/// FNV-1a 64-bit over bytes.
std::uint64_t fnv1a64(std::string_view s) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t bounded(std::uint64_t n);

  /// Uniform real in [0, 1) with 53 random bits.
  double unit();

  /// Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(bounded(i + 1));
      using std::swap;
      swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nerif
