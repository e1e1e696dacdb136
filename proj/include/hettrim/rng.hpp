#pragma once

#include <cstdint>
#include <initializer_list>

namespace hettrim {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of integer tags, e.g.
/// derive_seed(seed, {fold, tree}). Order of tags matters.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x3c6ef372fe94f82bULL));
  return h;
}

/// Counter-based generator: draw c of stream `key` is a pure function of
/// (key, c), so any draw can be reproduced without replaying the stream.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr std::uint64_t at(std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(key ^ mix64(counter));
  }

  /// Uniform in the open interval (0, 1).
  static constexpr double uniform_at(std::uint64_t key, std::uint64_t counter) noexcept {
    return (static_cast<double>(at(key, counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t next_u64() noexcept { return at(key_, counter_++); }
  double uniform() noexcept { return uniform_at(key_, counter_++); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hettrim
