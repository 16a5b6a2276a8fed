#include "iidetect/plant.hpp"

#include <string>

#include "iidetect/error.hpp"

namespace iidetect {

void SystemModel::validate() const {
  const Index nx = A.rows();
  require_dims(A, nx, nx, "A");
  if (B.rows() != nx) throw Error(ErrorCode::kDimensionMismatch, "B must have n_x rows");
  if (C.cols() != nx) throw Error(ErrorCode::kDimensionMismatch, "C must have n_x columns");
  if (D.rows() != nx) throw Error(ErrorCode::kDimensionMismatch, "D must have n_x rows");
  require_dims(F, C.rows(), D.cols(), "F");
  require_dims(sigma_t, nx, nx, "Sigma_t");
  require_dims(sigma_w, C.rows(), C.rows(), "Sigma_w");
  require_size(mu1, nx, "mu1");
  require_dims(sigma1, nx, nx, "Sigma1");
  for (const Mat* m : {&A, &B, &C, &D, &F, &sigma_t, &sigma_w, &sigma1}) {
    if (!all_finite(*m)) throw Error(ErrorCode::kDomainError, "model contains non-finite entries");
  }
  if (!mu1.allFinite()) throw Error(ErrorCode::kDomainError, "mu1 contains non-finite entries");
  if (!is_symmetric(sigma_w) || Eigen::LLT<Mat>(sigma_w).info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "Sigma_w must be symmetric positive definite");
  }
  covariance_factor(sigma_t, "Sigma_t");
  covariance_factor(sigma1, "Sigma1");
}

Vec AnomalyProfile::at(std::int64_t k, Index n_delta) const {
  if (!active(k)) return Vec::Zero(n_delta);
  require_size(value, n_delta, "anomaly value");
  return value;
}

Plant::Plant(SystemModel model, std::uint64_t seed, NoiseMode mode)
    : model_(std::move(model)), mode_(mode), rng_(seed, StreamId::kPlant) {
  model_.validate();
  sqrt_sigma_t_ = covariance_factor(model_.sigma_t, "Sigma_t");
  sqrt_sigma_w_ = covariance_factor(model_.sigma_w, "Sigma_w");
  x_ = model_.mu1;
  if (mode_ == NoiseMode::kStochastic) {
    x_ += covariance_factor(model_.sigma1, "Sigma1") * rng_.normal_vector(model_.n_x());
  }
}

Vec Plant::step(const Vec& u, const Vec& delta) {
  require_size(u, model_.n_u(), "u");
  require_size(delta, model_.n_delta(), "delta");
  Vec y = model_.C * x_ + model_.F * delta;
  Vec next = model_.A * x_ + model_.B * u + model_.D * delta;
  if (mode_ == NoiseMode::kStochastic) {
    y += sqrt_sigma_w_ * rng_.normal_vector(model_.n_y());
    next += sqrt_sigma_t_ * rng_.normal_vector(model_.n_x());
  }
  x_ = std::move(next);
  ++k_;
  return y;
}

}  // namespace iidetect
