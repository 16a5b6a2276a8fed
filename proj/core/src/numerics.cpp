#include "iidetect/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "iidetect/error.hpp"

namespace iidetect {

namespace {

Mat symmetrized(const Mat& M) { return 0.5 * (M + M.transpose()); }

void require_square(const Mat& M, std::string_view name) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(name) + " must be square, got " + std::to_string(M.rows()) + "x" +
                    std::to_string(M.cols()));
  }
}

// Series expansion of P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x) = 1 - P(a, x), x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kSingularInnovationCovariance: return "SingularInnovationCovariance";
    case ErrorCode::kDomainError: return "DomainError";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kEmptyKernel: return "EmptyKernel";
    case ErrorCode::kNotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::kDimsInvalid: return "DimsInvalid";
    case ErrorCode::kRankRetryExhausted: return "RankRetryExhausted";
    case ErrorCode::kDecodeDrift: return "DecodeDrift";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
  }
  return "Unknown";
}

void require_dims(const Mat& M, Index rows, Index cols, std::string_view name) {
  if (M.rows() != rows || M.cols() != cols) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(name) + " expected " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", got " + std::to_string(M.rows()) + "x" +
                    std::to_string(M.cols()));
  }
}

void require_size(const Vec& v, Index size, std::string_view name) {
  if (v.size() != size) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(name) + " expected length " + std::to_string(size) + ", got " +
                    std::to_string(v.size()));
  }
}

bool is_symmetric(const Mat& M, double tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

bool all_finite(const Mat& M) { return M.allFinite(); }

double riccati_residual(const Mat& A, const Mat& C, const Mat& Q, const Mat& R, const Mat& P) {
  const Mat S = R + C * P * C.transpose();
  const Mat K = A * P * C.transpose();
  const Mat correction = K * S.ldlt().solve(K.transpose());
  return (A * P * A.transpose() - P + Q - correction).norm();
}

RiccatiSolution dare_solve(const Mat& A, const Mat& C, const Mat& Q, const Mat& R,
                           DareOptions options) {
  require_square(A, "A");
  const Index nx = A.rows();
  if (C.cols() != nx) {
    throw Error(ErrorCode::kDimensionMismatch, "C must have as many columns as A");
  }
  require_dims(Q, nx, nx, "Q");
  require_dims(R, C.rows(), C.rows(), "R");
  if (!is_symmetric(Q) || !is_symmetric(R)) {
    throw Error(ErrorCode::kDomainError, "Q and R must be symmetric");
  }
  if (Eigen::LLT<Mat>(R).info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "R must be positive definite");
  }

  Mat P = symmetrized(Q);
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    const Mat S = R + C * P * C.transpose();
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::kNonConvergence, "innovation covariance lost definiteness");
    }
    const Mat K = A * P * C.transpose();
    const Mat unsym = A * P * A.transpose() + Q - K * llt.solve(K.transpose());
    const double residual = (unsym - P).norm();
    if (!std::isfinite(residual)) {
      throw Error(ErrorCode::kNonConvergence, "Riccati iteration diverged");
    }
    if (residual <= options.tol) {
      return {P, it, residual};
    }
    P = symmetrized(unsym);
  }
  throw Error(ErrorCode::kNonConvergence,
              "Riccati iteration hit max_iter=" + std::to_string(options.max_iter) +
                  "; is (A, C) detectable?");
}

Mat kalman_gain(const Mat& A, const Mat& C, const Mat& P, const Mat& R) {
  require_square(A, "A");
  require_dims(P, A.rows(), A.rows(), "P");
  require_dims(R, C.rows(), C.rows(), "R");
  if (C.cols() != A.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "C must have as many columns as A");
  }
  const Mat S = R + C * P * C.transpose();
  Eigen::LLT<Mat> llt(S);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    throw Error(ErrorCode::kSingularInnovationCovariance, "R + C P C' is numerically singular");
  }
  // S is symmetric, so (A P C') S^-1 = (S^-1 C P A')'.
  return llt.solve(C * P * A.transpose()).transpose();
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw Error(ErrorCode::kDomainError, "gamma_p requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return std::clamp(gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(1.0 - gamma_q_continued_fraction(a, x), 0.0, 1.0);
}

double gamma_p_inv(double a, double p) {
  if (!(a > 0.0)) throw Error(ErrorCode::kDomainError, "gamma_p_inv requires a > 0");
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kDomainError, "gamma_p_inv requires 0 <= p < 1");
  }
  if (p == 0.0) return 0.0;

  double lo = 0.0;
  double hi = std::max(1.0, a);
  while (gamma_p(a, hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error(ErrorCode::kDomainError, "gamma_p_inv bracket overflow");
  }

  const double log_norm = std::lgamma(a);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double f = gamma_p(a, x) - p;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double density = std::exp((a - 1.0) * std::log(x) - x - log_norm);
    double next = x - f / density;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x) return next;
    x = next;
  }
  return x;
}

Index numerical_rank(const Mat& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(M);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0) return 0;
  return (s.array() > kRankTol * s(0)).count();
}

bool has_full_column_rank(const Mat& M) {
  return M.rows() >= M.cols() && numerical_rank(M) == M.cols();
}

bool has_full_rank(const Mat& M) { return numerical_rank(M) == std::min(M.rows(), M.cols()); }

Mat left_inverse(const Mat& M) {
  if (M.rows() < M.cols() || M.cols() == 0) {
    throw Error(ErrorCode::kRankDeficient,
                "a " + std::to_string(M.rows()) + "x" + std::to_string(M.cols()) +
                    " matrix cannot have full column rank");
  }
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  if (!(s(0) > 0.0) || !(s(s.size() - 1) > kRankTol * s(0))) {
    throw Error(ErrorCode::kRankDeficient, "matrix is not of full column rank");
  }
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

Mat kernel_basis(const Mat& ML) {
  const Index m = ML.rows();
  const Index n = ML.cols();
  if (m == n) throw Error(ErrorCode::kEmptyKernel, "square full-rank map has a trivial kernel");
  if (m > n) {
    throw Error(ErrorCode::kDimensionMismatch, "kernel_basis expects a wide matrix (rows < cols)");
  }
  if (m == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(ML, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  if (!(s(0) > 0.0) || !(s(m - 1) > kRankTol * s(0))) {
    throw Error(ErrorCode::kRankDeficient, "matrix is not of full row rank");
  }
  return svd.matrixV().rightCols(n - m);
}

Mat covariance_factor(const Mat& cov, std::string_view name) {
  require_square(cov, name);
  if (!is_symmetric(cov)) {
    throw Error(ErrorCode::kNotPositiveDefinite, std::string(name) + " is not symmetric");
  }
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  Eigen::LDLT<Mat> ldlt(cov);
  const Vec d = ldlt.vectorD();
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || (d.array() < -1e-12 * scale).any()) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                std::string(name) + " is not positive semidefinite");
  }
  Mat lower = ldlt.matrixL();
  lower = lower * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return ldlt.transpositionsP().transpose() * lower;
}

}  // namespace iidetect
