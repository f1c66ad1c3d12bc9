#pragma once

#include <cstdint>

namespace admmpc {

/// Deterministic splitmix-style generator. Integer state only, so identical
/// seeds produce bit-identical streams on every platform. Draws map the top
/// 53 bits of the mixed state to a double in [0, 1).
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi), computed as lo + (hi - lo) * uniform().
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Forks a statistically independent substream for the given index without
  /// advancing this generator. fork(i) == fork(i) for equal states.
  RngState fork(std::uint64_t stream) const {
    return RngState(mix(state_ ^ mix(stream + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t state() const { return state_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace admmpc
