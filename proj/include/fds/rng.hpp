// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace fds {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit key comes from the run seed and the upper half of the 128-bit
/// counter selects an independent stream, so every consumer of randomness
/// (view scheduling, camera sampling, oracle noise, initialization) draws
/// from its own stream and cannot perturb the others.
class Philox {
 public:
  Philox(std::uint64_t key, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal via the cosine branch of Box-Muller.
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Folds a list of identifiers into a key; used to derive keyed substreams
/// such as (seed, iteration, view).
std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> parts) noexcept;

/// Stream identifiers reserved for each randomness consumer.
namespace streams {
inline constexpr std::uint64_t kViewSchedule = 1;
inline constexpr std::uint64_t kCameraSampling = 2;
inline constexpr std::uint64_t kOracleNoise = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kFloaters = 5;
inline constexpr std::uint64_t kTexture = 6;
inline constexpr std::uint64_t kErrorMap = 7;
}  // namespace streams

}  // namespace fds
