#include "iidetect/target.hpp"

#include <cmath>

#include "iidetect/error.hpp"

namespace iidetect {

void EncodedConfig::validate() const {
  const Index nx = F1.rows();
  const Index ny = F3.cols();
  const Index nr = H1.rows();
  require_dims(F1, nx, nx, "F1");
  require_dims(F2, nx, F2.cols(), "F2");
  require_dims(F3, nx, ny, "F3");
  require_dims(H1, nr, ny, "H1");
  require_dims(H2, nr, nx, "H2");
  require_dims(W_root, nr, nr, "W_root");
  require_size(pi6_left, pi6.size(), "Pi6^L");
  require_dims(pi8, pi6.size(), ny, "Pi8");
  require_dims(pi9, pi4.size(), ny, "Pi9");
  require_size(xhat0, nx, "xhat0");
  for (const Mat* m : {&F1, &F2, &F3, &H1, &H2, &W_root, &pi8, &pi9}) {
    if (!all_finite(*m)) throw Error(ErrorCode::kDomainError, "config has non-finite entries");
  }
  if (!pi6.allFinite() || !pi6_left.allFinite() || !pi4.allFinite() || !xhat0.allFinite() ||
      !std::isfinite(alpha)) {
    throw Error(ErrorCode::kDomainError, "config has non-finite entries");
  }
}

bool operator==(const EncodedConfig& a, const EncodedConfig& b) {
  return a.F1 == b.F1 && a.F2 == b.F2 && a.F3 == b.F3 && a.H1 == b.H1 && a.H2 == b.H2 &&
         a.W_root == b.W_root && a.pi6 == b.pi6 && a.pi6_left == b.pi6_left && a.pi8 == b.pi8 &&
         a.pi4 == b.pi4 && a.pi9 == b.pi9 && a.alpha == b.alpha && a.xhat0 == b.xhat0;
}

TargetState target_init(const EncodedConfig& config) { return {config.xhat0}; }

TargetDiag target_step(const EncodedConfig& config, TargetState& state, const Vec& util,
                       const Vec& ytil) {
  require_size(util, config.nu_tilde(), "util");
  require_size(ytil, config.ny_tilde(), "ytil");
  require_size(state.xtil, config.nx_tilde(), "xtil");

  TargetDiag diag;
  diag.rtil = config.H1 * ytil - config.H2 * state.xtil;
  const Vec masked_y = config.pi8 * ytil;
  diag.ztil = config.pi6 * (config.W_root * diag.rtil).squaredNorm() + masked_y;
  diag.zeta = config.pi6_left.dot(diag.ztil - masked_y);
  diag.atil = config.pi9 * ytil;
  if (diag.zeta > config.alpha) diag.atil += config.pi4;
  state.xtil = config.F1 * state.xtil + config.F2 * util + config.F3 * ytil;
  return diag;
}

TargetDetector::TargetDetector(EncodedConfig config)
    : config_(std::move(config)), state_(target_init(config_)) {
  config_.validate();
}

void TargetDetector::set_state(TargetState state) {
  require_size(state.xtil, config_.nx_tilde(), "xtil");
  state_ = std::move(state);
}

}  // namespace iidetect
