#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ee {

// Stream seeds are derived from one master seed so that every chain (and the
// auxiliary init/orchestrator streams) runs on its own well-separated generator.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(master + (stream + 1) * 0x9e3779b97f4a7c15ULL);
}

// Reserved stream tags; chain i uses tag i.
inline constexpr std::uint64_t kInitStream = 0x10000000ULL;          // + chain index
inline constexpr std::uint64_t kOrchestratorStream = 0x20000000ULL;  // PT swap plumbing

// mt19937_64 with hand-rolled draw helpers: the std distribution objects are
// implementation-defined, these are not, so equal seeds give equal streams anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  double uniform01() { return (gen_() >> 11) * 0x1.0p-53; }  // [0,1)

  std::uint64_t uniform_below(std::uint64_t n) {  // [0,n)
    // multiply-shift; bias is O(n/2^64), irrelevant at sampling scale
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  double normal() {
    // Marsaglia polar without the cached spare, so draws never carry hidden state
    for (;;) {
      double u = 2.0 * uniform01() - 1.0;
      double v = 2.0 * uniform01() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ee
