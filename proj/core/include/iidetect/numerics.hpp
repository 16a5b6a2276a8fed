#pragma once

// Dense linear algebra helpers plus the two special-purpose routines the
// detector design needs: a discrete algebraic Riccati solver and the
// regularized lower incomplete gamma function with its inverse.

#include <cstddef>
#include <string_view>

#include <Eigen/Dense>

namespace iidetect {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

/// Relative singular-value threshold used for every "full rank" decision.
inline constexpr double kRankTol = 1e-10;

struct RiccatiSolution {
  Mat P;
  std::size_t iterations = 0;
  double residual_norm = 0.0;
};

struct DareOptions {
  double tol = 1e-12;
  std::size_t max_iter = 100000;
};

/// Frobenius norm of A P A' - P + Q - A P C' (R + C P C')^-1 C P A'.
double riccati_residual(const Mat& A, const Mat& C, const Mat& Q, const Mat& R, const Mat& P);

/// Solves the filtering DARE by fixed-point iteration of the Riccati
/// recursion started at P = Q, symmetrizing every step.  Throws
/// kNonConvergence when max_iter is reached, which in practice means (A, C)
/// is not detectable.
RiccatiSolution dare_solve(const Mat& A, const Mat& C, const Mat& Q, const Mat& R,
                           DareOptions options = {});

/// L = A P C' (R + C P C')^-1.
Mat kalman_gain(const Mat& A, const Mat& C, const Mat& P, const Mat& R);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// x >= 0 with gamma_p(a, x) = p, for 0 <= p < 1.
double gamma_p_inv(double a, double p);

/// Left inverse M^L (M^L M = I) via SVD; throws kRankDeficient unless M has
/// full column rank.
Mat left_inverse(const Mat& M);

/// Orthonormal basis of ker(ML) for a wide, full-row-rank ML.
Mat kernel_basis(const Mat& ML);

/// Numerical rank with the relative threshold kRankTol.
Index numerical_rank(const Mat& M);
bool has_full_column_rank(const Mat& M);
bool has_full_rank(const Mat& M);

/// Returns S with S S' = cov.  Cholesky when cov is PD, pivoted LDL' when it
/// is only PSD; throws kNotPositiveDefinite otherwise.
Mat covariance_factor(const Mat& cov, std::string_view name = "covariance");

bool is_symmetric(const Mat& M, double tol = 1e-10);
bool all_finite(const Mat& M);

void require_dims(const Mat& M, Index rows, Index cols, std::string_view name);
void require_size(const Vec& v, Index size, std::string_view name);

}  // namespace iidetect
