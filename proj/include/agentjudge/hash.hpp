#pragma once

#include <cstdint>
#include <string>

namespace agentjudge {

/// Hex-encoded SHA-256 of a byte string. Used for screenshot content
/// addressing and request digests.
std::string sha256_hex(const std::string& bytes);

/// Deterministic 64-bit stream splitter: derives an independent seed from a
/// base seed and a stream index. Stable across platforms.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Small deterministic RNG. std::uniform_*_distribution is not pinned by the
/// standard, so uniform draws are derived from raw splitmix64 output to keep
/// rollouts byte-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  /// Next raw 64-bit value (splitmix64; simple and portable).
  std::uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double();

  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t next_index(std::size_t n);

 private:
  std::uint64_t state_;
};

}  // namespace agentjudge
