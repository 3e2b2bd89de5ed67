#pragma once

#include <cstdint>
#include <cmath>

namespace ctm {

// Counter-based generator: every output is a hash of (key, counter), so
// sub-streams fork cheaply and any draw can be replayed from (seed, path).
// Mixing function is the splitmix64 finalizer.
struct Rng {
  std::uint64_t key = 0;
  std::uint64_t counter = 0;

  Rng() = default;
  Rng(std::uint64_t k, std::uint64_t c) : key(k), counter(c) {}

  static constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix(std::uint64_t x) {
    x += golden;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  static Rng from_seed(std::uint64_t seed) {
    return Rng{mix(seed ^ 0x5bf0363529a5b9e1ull), 0};
  }

  // Independent sub-stream; child counter starts at zero.
  Rng fork(std::uint64_t stream) const {
    return Rng{mix(key ^ mix(stream ^ 0xd6e8feb86659fd93ull)), 0};
  }

  std::uint64_t next_u64() { return mix(key + golden * ++counter); }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // (0, 1]
  double uniform_pos() { return double((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ctm
