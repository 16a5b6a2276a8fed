#include "iidetect/detector.hpp"

#include "iidetect/error.hpp"

namespace iidetect {

double chi_squared_threshold(Index dof, double a_star) {
  if (dof < 1) throw Error(ErrorCode::kDomainError, "chi-squared needs at least one dof");
  if (!(a_star > 0.0 && a_star < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "A_star must lie in (0, 1)");
  }
  return 2.0 * gamma_p_inv(0.5 * static_cast<double>(dof), 1.0 - a_star);
}

DetectorDesign design_detector(const SystemModel& model, double a_star, DareOptions options) {
  model.validate();
  DetectorDesign d;
  d.a_star = a_star;
  d.n_y = model.n_y();
  d.alpha = chi_squared_threshold(d.n_y, a_star);

  RiccatiSolution dare = dare_solve(model.A, model.C, model.sigma_t, model.sigma_w, options);
  d.P = std::move(dare.P);
  d.dare_iterations = dare.iterations;
  d.dare_residual = dare.residual_norm;
  d.L = kalman_gain(model.A, model.C, d.P, model.sigma_w);

  d.sigma = model.C * d.P * model.C.transpose() + model.sigma_w;
  d.sigma = 0.5 * (d.sigma + d.sigma.transpose());
  Eigen::LLT<Mat> llt(d.sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "residual covariance is not positive definite");
  }
  d.sigma_inv = llt.solve(Mat::Identity(d.n_y, d.n_y));
  d.sigma_inv = 0.5 * (d.sigma_inv + d.sigma_inv.transpose());
  return d;
}

double distance_measure(const Mat& sigma_inv, const Vec& r) { return r.dot(sigma_inv * r); }

StandardDetector::StandardDetector(const SystemModel& model, DetectorDesign design)
    : A_(model.A), B_(model.B), C_(model.C), design_(std::move(design)), xhat_(model.mu1) {
  require_dims(design_.L, model.n_x(), model.n_y(), "L");
  require_dims(design_.sigma_inv, model.n_y(), model.n_y(), "Sigma^-1");
}

StepDiag StandardDetector::step(const Vec& u, const Vec& y) {
  require_size(u, B_.cols(), "u");
  require_size(y, C_.rows(), "y");
  StepDiag diag;
  diag.r = y - C_ * xhat_;
  diag.z = distance_measure(design_.sigma_inv, diag.r);
  diag.alarm = diag.z > design_.alpha;
  xhat_ = A_ * xhat_ + B_ * u + design_.L * diag.r;
  return diag;
}

}  // namespace iidetect
