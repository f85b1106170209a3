#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace arl {

/// Purpose tags mixed into derived seeds so that independent consumers
/// (mutation noise, rollouts, selection, ...) never share a stream.
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kMutation = 2,
  kRollout = 3,
  kSelection = 4,
  kPlan = 5,
  kZooNoise = 6,
  kReset = 7,
  kTest = 99,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hierarchical seed: fold each coordinate into the running hash.
/// derive_seed(master, {trial, generation, agent, tag}) depends only on its
/// arguments, never on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t v : path) h = splitmix64(h ^ splitmix64(v + 0x632be59bd9b4e019ULL));
  return h;
}

class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() { return normal_(engine_); }

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RngStream make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return RngStream(derive_seed(master, path));
}

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace arl
