#pragma once

#include <array>
#include <cstdint>

#include "cnmf/matrix.hpp"

namespace cnmf {

/// Deterministic random stream: xoshiro256** seeded through splitmix64.
///
/// Normal variates use the Box–Muller transform (both outputs of a pair are
/// consumed, cosine branch first); uniforms take the top 53 bits of each
/// 64-bit output. Only integer arithmetic touches the generator state, so a
/// seed produces the same bit stream on every platform; normal variates agree
/// up to the last-ulp behavior of the platform's log/cos/sin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Standard normal.
  double normal();

  /// Independent stream derived from this generator's seed, not its state.
  Rng child(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Mixes a stream id into a seed; used to hand parallel tasks and sub-steps
/// their own reproducible streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Fills row-major with i.i.d. N(0, 1) draws from `rng`.
DenseMatrix gaussian_matrix(Index rows, Index cols, Rng& rng);

/// Fills row-major with i.i.d. U[0, 1) draws from `rng`.
DenseMatrix uniform_matrix(Index rows, Index cols, Rng& rng);

}  // namespace cnmf
