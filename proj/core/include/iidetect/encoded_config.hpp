#pragma once

// The composed matrices a remote station needs to run the encoded detector.
// Nothing here exposes A, B, C, L, Sigma or an individual coding matrix that
// would decode the user's signals.

#include "iidetect/numerics.hpp"

namespace iidetect {

struct EncodedConfig {
  Mat F1;        // Pi3 (A - L C) Pi3^L                ntx x ntx
  Mat F2;        // Pi3 B Pi2^L                        ntx x ntu
  Mat F3;        // Pi3 L Pi1^L                        ntx x nty
  Mat H1;        // Pi7                                ntr x nty
  Mat H2;        // Pi7 Pi1 C Pi3^L                    ntr x ntx
  // Symmetric PSD square root of W = (Pi1^L Pi7^L)' Sigma^-1 (Pi1^L Pi7^L),
  // ntr x ntr.  The distance is evaluated as |W_root rtil|^2: rtil carries a
  // large component in ker(W), and the explicit quadratic form rtil' W rtil
  // loses about eight digits to cancellation there.
  Mat W_root;
  Vec pi6;       // ntz
  Vec pi6_left;  // row of Pi6^L, stored as a vector of length ntz
  Mat pi8;       // ntz x nty
  Vec pi4;       // nta
  Mat pi9;       // nta x nty
  double alpha = 0.0;
  Vec xhat0;     // Pi3 mu1, the on-manifold initial condition

  Index nx_tilde() const { return F1.rows(); }
  Index nu_tilde() const { return F2.cols(); }
  Index ny_tilde() const { return F3.cols(); }
  Index nr_tilde() const { return H1.rows(); }
  Index nz_tilde() const { return pi6.size(); }
  Index na_tilde() const { return pi4.size(); }

  Mat W() const { return W_root.transpose() * W_root; }

  /// Throws kDimensionMismatch / kDomainError on inconsistent shapes or
  /// non-finite entries.
  void validate() const;
};

bool operator==(const EncodedConfig& a, const EncodedConfig& b);

}  // namespace iidetect
