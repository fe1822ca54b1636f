#ifndef CROWDRATE_RNG_HPP
#define CROWDRATE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace crowdrate {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG with explicit normal/uniform implementations so draws do
// not depend on the standard library's distribution internals. Sub-streams
// derive from (seed, stream id), which keeps chains, replicates, and trials
// reproducible independently of execution order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(splitmix64(seed) ^ splitmix64(stream_id * 0x9e3779b97f4a7c15ULL + 1));
  }
  Rng substream(std::uint64_t stream_id) const {
    return Rng(splitmix64(seed_) ^ splitmix64(stream_id * 0xda942042e4dd58b5ULL + 7));
  }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, one cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t bound = n * ((~0ULL) / n);  // rejection avoids modulo bias
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= bound);
    return x % n;
  }

  // Gamma(shape=2, scale=1) as a sum of two exponentials
  double gamma2() { return -std::log((1.0 - uniform()) * (1.0 - uniform())); }

  // Beta(2, 2)
  double beta22() {
    const double a = gamma2();
    const double b = gamma2();
    return a / (a + b);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace crowdrate

#endif
