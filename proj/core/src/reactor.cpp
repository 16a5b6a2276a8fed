#include "iidetect/reactor.hpp"

#include <cmath>

namespace iidetect {

SystemModel reactor_model(ReactorNoise noise) {
  SystemModel m;
  m.A.resize(4, 4);
  m.A << 0.8353, 0, 0, 0,
         0, 0.8324, 0, 0.0031,
         0, 0.0001, 0.1633, 0,
         0, 0.0280, 0.0172, 0.9320;
  m.B.resize(4, 3);
  m.B << 0.0458, 0, 0,
         0, 0.0457, 0,
         0, 0, 0.0231,
         0, 0.0007, 0.0006;
  m.C.resize(3, 4);
  m.C << 1, 0, 0, 0,
         0, 1, 0, 0,
         0, 0, 1, 0;
  m.D.resize(4, 1);
  m.D << 1, 2, 3, 4;
  m.F.resize(3, 1);
  m.F << 1, 2, 3;
  if (noise == ReactorNoise::kDerived) {
    m.sigma_t = Mat::Identity(4, 4);
    m.sigma_w = 0.01 * Mat::Identity(3, 3);
  } else {
    m.sigma_t = 0.001 * Mat::Identity(4, 4);
    m.sigma_w = 0.001 * Mat::Identity(3, 3);
  }
  m.mu1.resize(4);
  m.mu1 << 6.94, 13.76, 1, 1;
  m.sigma1 = 0.001 * Mat::Identity(4, 4);
  return m;
}

Mat reactor_published_gain() {
  Mat L(4, 3);
  L << 0.8271, 0, 0,
       0, 0.8243, 0.0002,
       0, 0.0002, 0.1619,
       0, 0.0481, 0.0543;
  return L;
}

Mat reactor_published_residual_covariance() {
  Mat S(3, 3);
  S << 1.0169, 0, 0,
       0, 1.0169, 0.0001,
       0, 0.0001, 1.0105;
  return S;
}

Vec reactor_input(std::int64_t k, Index n_u) {
  const double c = std::cos(0.5 * static_cast<double>(k));
  return Vec::Constant(n_u, 50.0 * c * c);
}

}  // namespace iidetect
