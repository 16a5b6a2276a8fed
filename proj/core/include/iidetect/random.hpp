#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "iidetect/numerics.hpp"

namespace iidetect {

/// Independent sub-streams derived from one experiment seed.
enum class StreamId : std::uint64_t {
  kPlant = 1,
  kKey = 2,
  kEncoding = 3,
};

/// Seeded random stream.  The engine seed is a SplitMix64 mix of
/// (seed, stream), so streams with different ids never share a sequence.
/// Normals come from a Box-Muller transform so traces are reproducible
/// across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);
  RandomStream(std::uint64_t seed, StreamId stream)
      : RandomStream(seed, static_cast<std::uint64_t>(stream)) {}

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  Vec normal_vector(Index n);
  Mat uniform_matrix(Index rows, Index cols, double half_width);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace iidetect
