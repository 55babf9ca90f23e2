#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace simflow {

using Seed = std::uint64_t;

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: same counter and key give same block.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Derives an independent child seed from a parent seed and a tag.
///
/// Streams form a tree: a pipeline derives one child per outer task (s = 0, 1, ...), and each
/// task derives further children for its own sub-steps. Results never depend on thread count
/// because every task owns its stream.
Seed derive_seed(Seed parent, std::uint64_t tag) noexcept;

/// derive_seed applied along a path of tags.
Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) noexcept;

/// Counter-based random engine. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(Seed seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Marsaglia polar method).
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;

  Seed seed() const noexcept { return seed_; }
  /// Independent stream keyed by derive_seed(seed(), tag).
  Rng child(std::uint64_t tag) const noexcept { return Rng(derive_seed(seed_, tag)); }

 private:
  void refill() noexcept;

  Seed seed_;
  std::array<std::uint32_t, 2> key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int index_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace simflow
