#ifndef KERNELCAST_RNG_HPP
#define KERNELCAST_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace kcast {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s = h ^ b;
  return splitmix64(s);
}

// A seeded stream with counter-style derivation: derive(k) yields an
// independent stream that depends only on (root, k), never on draw order.
// Backtests key streams by (seed, day, hour), so results are identical
// under any parallel schedule.
class RngStream {
 public:
  explicit RngStream(std::uint64_t root) : root_(root), eng_(root) {}

  RngStream derive(std::uint64_t k) const { return RngStream(mix_seed(root_, k)); }

  std::uint64_t root() const { return root_; }

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1), 53-bit resolution
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  double normal01() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t root_;
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline RngStream make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0) {
  return RngStream(mix_seed(mix_seed(mix_seed(seed, a), b), c));
}

}  // namespace kcast

#endif
