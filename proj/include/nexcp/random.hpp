#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace nexcp {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the same
/// (counter, key) pair always yields the same four output words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer, used to fold substream identifiers into keys.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based random stream.
///
/// A stream is identified by a 64-bit key; values are produced by encrypting
/// an incrementing 128-bit counter. `derive(id)` returns an independent child
/// stream whose key depends only on (parent key, id), so any (trial, step,
/// purpose) path maps to the same numbers regardless of execution order.
///
/// Consumption contract: `next_u64` and `uniform` consume one 64-bit value,
/// `normal` consumes exactly two.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : key_(mix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

  [[nodiscard]] RandomStream derive(std::uint64_t id) const;
  [[nodiscard]] RandomStream derive(std::initializer_list<std::uint64_t> path) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (cosine branch only).
  double normal();
  /// Uniform integer in [0, bound) by rejection; consumes a variable count.
  std::uint64_t below(std::uint64_t bound);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t consumed() const { return position_; }

 private:
  struct KeyTag {};
  RandomStream(std::uint64_t key, KeyTag) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t position_ = 0;  // 64-bit values handed out so far
  std::array<std::uint32_t, 4> block_{};
};

// Substream purposes, kept apart so adding a method never perturbs data.
namespace stream_id {
inline constexpr std::uint64_t kCovariates = 0x636f76;
inline constexpr std::uint64_t kNoise = 0x6e6f69;
inline constexpr std::uint64_t kSwap = 0x737770;
inline constexpr std::uint64_t kPermutation = 0x706572;
inline constexpr std::uint64_t kHuber = 0x687562;
}  // namespace stream_id

}  // namespace nexcp
