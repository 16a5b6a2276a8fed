#pragma once

// Steady-state Kalman filter with a chi-squared change detector on the
// residual r_k = y_k - C xhat_k.

#include "iidetect/numerics.hpp"
#include "iidetect/plant.hpp"

namespace iidetect {

struct DetectorDesign {
  Mat L;          // n_x x n_y filter gain
  Mat P;          // asymptotic estimation error covariance
  Mat sigma;      // residual covariance C P C' + Sigma_w
  Mat sigma_inv;
  double alpha = 0.0;   // alarm threshold on z
  double a_star = 0.0;  // design false alarm rate
  Index n_y = 0;
  std::size_t dare_iterations = 0;
  double dare_residual = 0.0;
};

/// 2 * P^-1(dof / 2, 1 - a_star): the chi-squared quantile that yields a
/// false alarm rate of a_star.
double chi_squared_threshold(Index dof, double a_star);

DetectorDesign design_detector(const SystemModel& model, double a_star, DareOptions options = {});

struct StepDiag {
  Vec r;
  double z = 0.0;
  bool alarm = false;
};

/// z = r' Sigma^-1 r.
double distance_measure(const Mat& sigma_inv, const Vec& r);

class StandardDetector {
 public:
  /// Starts from xhat_1 = E[x_1] = mu1.
  StandardDetector(const SystemModel& model, DetectorDesign design);

  StepDiag step(const Vec& u, const Vec& y);

  const Vec& xhat() const { return xhat_; }
  const DetectorDesign& design() const { return design_; }

 private:
  Mat A_, B_, C_;
  DetectorDesign design_;
  Vec xhat_;
};

}  // namespace iidetect
