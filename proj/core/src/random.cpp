#include "iidetect/random.hpp"

#include <cmath>
#include <numbers>

namespace iidetect {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (spare_) {
    const double out = *spare_;
    spare_.reset();
    return out;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

Vec RandomStream::normal_vector(Index n) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Mat RandomStream::uniform_matrix(Index rows, Index cols, double half_width) {
  Mat M(rows, cols);
  // Row-major fill so the draw order matches the serialized layout.
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) M(i, j) = uniform(-half_width, half_width);
  }
  return M;
}

}  // namespace iidetect
