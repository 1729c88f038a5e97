#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace saint {

// Mixes a seed with a stream tag so each consumer (spawning, dawdling,
// exploration, replay sampling, weight init) gets an independent sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded generator with distribution helpers whose output is fully specified
// here rather than by the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double rate);
  double normal(double mean, double stddev);

  // Textual engine state for checkpoints.
  std::string save_state() const;
  void load_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

namespace stream {
inline constexpr std::uint64_t kSpawn = 1;
inline constexpr std::uint64_t kVehicleParams = 2;
inline constexpr std::uint64_t kDawdle = 3;
inline constexpr std::uint64_t kTtcExplore = 4;
inline constexpr std::uint64_t kAccExplore = 5;
inline constexpr std::uint64_t kReplay = 6;
inline constexpr std::uint64_t kInit = 7;
}  // namespace stream

}  // namespace saint
