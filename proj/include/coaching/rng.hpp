#pragma once

#include <cstdint>
#include <span>

namespace coaching {

// Independent stream tags. Every consumer of randomness in a run draws from its
// own key so enabling one component never shifts another's sequence.
enum class Stream : std::uint64_t {
  EnvReset = 1,
  PolicyInit = 2,
  ActionNoise = 3,
  Shuffle = 4,
  Coach = 5,
  EvalReset = 6,
};

std::uint64_t mix64(std::uint64_t z);

// Hashes (seed, stream, index) into a 64-bit key.
std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

/// Counter-based generator: the n-th draw is a pure function of (key, n).
/// Copying the object snapshots the stream position.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// Fisher-Yates.
void shuffle(std::span<std::size_t> values, CounterRng& rng);

}  // namespace coaching
