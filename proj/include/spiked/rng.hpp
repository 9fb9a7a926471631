#pragma once

#include <array>
#include <cstdint>

#include "spiked/types.hpp"

namespace spiked {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: output is
/// a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key) noexcept;
};

/// splitmix64 finalizer; used to derive child seeds from (seed, index).
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

/// Stream identifiers keep draws for different purposes disjoint under one seed.
enum class RngStream : std::uint32_t {
  kMatrix = 0,
  kPerturbation = 1,
  kProbe = 2,
};

/// Counter-based generator keyed by (seed, stream). Every draw is addressed by
/// an explicit 64-bit counter and a lane, so results do not depend on the
/// order in which entries are visited or on how work is split across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngStream stream) noexcept;

  /// Two uniforms in the open interval (0, 1).
  std::array<double, 2> uniforms(std::uint64_t counter, std::uint32_t lane) const noexcept;

  /// Two independent standard normals (Box-Muller on one uniform pair).
  std::array<double, 2> normals(std::uint64_t counter, std::uint32_t lane) const noexcept;

 private:
  Philox4x32::Key key_;
  std::uint32_t stream_;
};

/// Sequential convenience wrapper: an auto-incrementing counter over CounterRng.
class SequentialRng {
 public:
  SequentialRng(std::uint64_t seed, RngStream stream) noexcept : rng_(seed, stream) {}

  double uniform() noexcept;
  double normal() noexcept;
  /// Complex standard normal: real and imaginary parts i.i.d. N(0, 1/2).
  Complex complex_normal() noexcept;

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace spiked
