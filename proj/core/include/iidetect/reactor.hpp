#pragma once

// Well-stirred chemical reactor with a heat exchanger: x = (C0, T0, Tw, Tm),
// u = (Cu, Tu, Twu), y = (C0, T0, Tw).

#include <cstdint>

#include "iidetect/numerics.hpp"
#include "iidetect/plant.hpp"

namespace iidetect {

enum class ReactorNoise {
  /// Sigma_t = I, Sigma_w = 0.01 I: reproduces the published gain and
  /// residual covariance.
  kDerived,
  /// Sigma_t = Sigma_w = 0.001 I as listed next to the model matrices.
  kAsPrinted,
};

SystemModel reactor_model(ReactorNoise noise = ReactorNoise::kDerived);

/// Published steady-state gain and residual covariance, rounded to 4 digits.
Mat reactor_published_gain();
Mat reactor_published_residual_covariance();

inline constexpr double kReactorAStar = 0.1;
inline constexpr double kReactorPublishedAlpha = 6.2514;
inline constexpr std::int64_t kReactorFaultOnset = 20;
inline constexpr double kReactorFaultValue = 0.9;

/// u_k = 50 cos(0.5 k)^2 on every input channel.
Vec reactor_input(std::int64_t k, Index n_u = 3);

}  // namespace iidetect
