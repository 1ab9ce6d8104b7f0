#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gg/rng.hpp"

namespace gg {

// One replica: N spins in {-1,+1}, bit-packed (set bit = spin -1).
class SpinConfig {
 public:
  explicit SpinConfig(int n) : n_(n), words_((n + 63) / 64, 0) {
    if (n < 1) throw std::invalid_argument("SpinConfig: N must be positive");
  }

  int size() const { return n_; }

  int spin(int i) const {
    return (words_[i >> 6] >> (i & 63)) & 1 ? -1 : +1;
  }

  void set(int i, int value) {
    std::uint64_t bit = 1ULL << (i & 63);
    if (value < 0)
      words_[i >> 6] |= bit;
    else
      words_[i >> 6] &= ~bit;
  }

  void flip(int i) { words_[i >> 6] ^= 1ULL << (i & 63); }

  static SpinConfig all_plus(int n) { return SpinConfig(n); }

  static SpinConfig all_minus(int n) {
    SpinConfig c(n);
    for (int i = 0; i < n; ++i) c.flip(i);
    return c;
  }

  static SpinConfig alternating(int n) {
    SpinConfig c(n);
    for (int i = 1; i < n; i += 2) c.flip(i);
    return c;
  }

  // Spin i = -1 iff bit i of mask is set; used by the Gray-code enumerator.
  static SpinConfig from_mask(int n, std::uint64_t mask) {
    SpinConfig c(n);
    c.words_[0] = mask;
    return c;
  }

  static SpinConfig random(int n, CounterRng& rng) {
    SpinConfig c(n);
    for (int i = 0; i < n; ++i)
      if (rng.next_u64() & 1) c.flip(i);
    return c;
  }

  SpinConfig negated() const {
    SpinConfig c(*this);
    for (int i = 0; i < n_; ++i) c.flip(i);
    return c;
  }

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

 private:
  int n_;
  std::vector<std::uint64_t> words_;
};

}  // namespace gg
