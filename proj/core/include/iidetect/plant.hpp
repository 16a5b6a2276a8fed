#pragma once

// Discrete-time stochastic LTI plant
//   x_{k+1} = A x_k + B u_k + t_k + D delta_k
//   y_k     = C x_k + w_k + F delta_k
// with t ~ N(0, Sigma_t), w ~ N(0, Sigma_w) and x_1 ~ N(mu1, Sigma1).

#include <cstdint>

#include "iidetect/numerics.hpp"
#include "iidetect/random.hpp"

namespace iidetect {

struct SystemModel {
  Mat A, B, C, D, F;
  Mat sigma_t;  // state disturbance covariance
  Mat sigma_w;  // output disturbance covariance
  Vec mu1;      // E[x_1]
  Mat sigma1;   // Cov[x_1]

  Index n_x() const { return A.rows(); }
  Index n_u() const { return B.cols(); }
  Index n_y() const { return C.rows(); }
  Index n_delta() const { return D.cols(); }

  /// Throws kDimensionMismatch on inconsistent shapes and
  /// kNotPositiveDefinite when a covariance is unusable (Sigma_w must be PD,
  /// Sigma_t and Sigma1 PSD).
  void validate() const;
};

/// Additive anomaly delta_k: zero, or a constant vector from an onset step on.
struct AnomalyProfile {
  enum class Kind { kNone, kStep };

  Kind kind = Kind::kNone;
  std::int64_t onset = 0;
  Vec value;

  static AnomalyProfile none() { return {}; }
  static AnomalyProfile step(std::int64_t onset, Vec value) {
    return {Kind::kStep, onset, std::move(value)};
  }

  bool active(std::int64_t k) const { return kind == Kind::kStep && k >= onset; }
  Vec at(std::int64_t k, Index n_delta) const;
};

enum class NoiseMode { kStochastic, kDeterministic };

/// Plant simulator.  y_k is emitted from the pre-update state, then the state
/// advances; k starts at 1.
class Plant {
 public:
  Plant(SystemModel model, std::uint64_t seed, NoiseMode mode = NoiseMode::kStochastic);

  /// Returns y_k and advances x_k -> x_{k+1}.
  Vec step(const Vec& u, const Vec& delta);

  std::int64_t k() const { return k_; }
  const Vec& state() const { return x_; }
  const SystemModel& model() const { return model_; }

 private:
  SystemModel model_;
  NoiseMode mode_;
  RandomStream rng_;
  Mat sqrt_sigma_t_;
  Mat sqrt_sigma_w_;
  Vec x_;
  std::int64_t k_ = 1;
};

}  // namespace iidetect
