#pragma once

// Remote-side encoded anomaly detector.  Depends only on EncodedConfig; it
// never sees a plaintext signal or the user's keys.

#include "iidetect/encoded_config.hpp"
#include "iidetect/numerics.hpp"

namespace iidetect {

struct TargetState {
  Vec xtil;  // immersed filter state, Pi3 xhat on the manifold
};

struct TargetDiag {
  Vec rtil;
  Vec ztil;
  double zeta = 0.0;  // Pi6^L (ztil - Pi8 ytil), the recovered distance
  Vec atil;
};

TargetState target_init(const EncodedConfig& config);

TargetDiag target_step(const EncodedConfig& config, TargetState& state, const Vec& util,
                       const Vec& ytil);

class TargetDetector {
 public:
  explicit TargetDetector(EncodedConfig config);

  TargetDiag step(const Vec& util, const Vec& ytil) { return target_step(config_, state_, util, ytil); }

  const TargetState& state() const { return state_; }
  void set_state(TargetState state);
  const EncodedConfig& config() const { return config_; }

 private:
  EncodedConfig config_;
  TargetState state_;
};

}  // namespace iidetect
