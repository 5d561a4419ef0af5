#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

// Portable, seedable randomness. Everything downstream (synthetic data,
// splits, experiment replicates) draws from Xoshiro256pp streams derived via
// Rng::derive(seed, {path...}), so independent concerns never share a stream
// and replicates are reproducible from a single base seed.
//
// Stream-splitting rule: the derived state key is
//   k = mix(seed); for each path word w: k = mix(k ^ mix(w))
// with mix() the splitmix64 finalizer; the four xoshiro state words are then
// the first four outputs of a splitmix64 sequence started at k.

namespace cric {

/// splitmix64 finalizer; also used as the stream-derivation mixer.
std::uint64_t mix64(std::uint64_t z);

/// First path word of every derived stream. Keeping them in one table makes
/// accidental stream reuse across modules impossible.
namespace stream_tag {
inline constexpr std::uint64_t sem_params = 1;  // structural weight draws
inline constexpr std::uint64_t sem_h = 2;       // per-environment latent noise
inline constexpr std::uint64_t sem_x1 = 3;
inline constexpr std::uint64_t sem_y = 4;
inline constexpr std::uint64_t sem_x2 = 5;
inline constexpr std::uint64_t split = 6;       // per-environment shuffles
inline constexpr std::uint64_t replicate = 7;   // experiment replicate seeds
inline constexpr std::uint64_t train_data = 8;
inline constexpr std::uint64_t test_data = 9;
}  // namespace stream_tag

/// xoshiro256++ with a gaussian sampler (Marsaglia polar, spare cached).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent stream addressed by (seed, path). Same inputs, same stream.
  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double next_double();

  /// Uniform on {0, 1, ..., bound-1} without modulo bias (bound > 0).
  std::uint64_t next_below(std::uint64_t bound);

  /// Standard normal via the polar method (sqrt/log only).
  double next_gaussian();

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cric
