#include "iidetect/coding.hpp"

#include <cmath>
#include <string>

#include "iidetect/error.hpp"

namespace iidetect {

namespace {

Mat padded_identity(Index rows, Index cols) {
  Mat M = Mat::Zero(rows, cols);
  M.topLeftCorner(std::min(rows, cols), std::min(rows, cols)).setIdentity();
  return M;
}

void check_left_inverse(const Mat& pi, const Mat& pi_left, const char* name) {
  const Index n = pi.cols();
  require_dims(pi_left, n, pi.rows(), name);
  if ((pi_left * pi - Mat::Identity(n, n)).norm() > 1e-9) {
    throw Error(ErrorCode::kRankDeficient, std::string(name) + " is not a left inverse");
  }
}

void check_kernel(const Mat& pi_left, const Mat& basis, const char* name) {
  require_dims(basis, pi_left.cols(), pi_left.cols() - pi_left.rows(), name);
  if ((pi_left * basis).norm() > 1e-10 * std::max(1.0, pi_left.norm())) {
    throw Error(ErrorCode::kRankDeficient, std::string(name) + " leaves the kernel");
  }
  if (!has_full_column_rank(basis)) {
    throw Error(ErrorCode::kRankDeficient, std::string(name) + " is not of full column rank");
  }
}

Vec draw_noise(const NoiseParams& noise, Index n, RandomStream& rng) {
  Vec s(n);
  for (Index i = 0; i < n; ++i) s(i) = noise.mean + noise.stddev * rng.normal();
  return s;
}

}  // namespace

void KeyDims::validate(const PlantDims& plant) const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kDimsInvalid, what); };
  if (nx <= plant.n_x) fail("encoded state dimension must exceed n_x");
  if (ny <= plant.n_y) fail("encoded output dimension must exceed n_y");
  if (nu <= plant.n_u) fail("encoded input dimension must exceed n_u");
  if (nr < ny) fail("encoded residual dimension must be at least the encoded output dimension");
  if (nz <= 1) fail("encoded distance dimension must exceed 1");
  if (na <= 1) fail("encoded alarm dimension must exceed 1");
}

bool operator==(const KeySet& a, const KeySet& b) {
  return a.dims == b.dims && a.plant == b.plant && a.seed == b.seed && a.pi1 == b.pi1 &&
         a.pi2 == b.pi2 && a.pi3 == b.pi3 && a.pi4 == b.pi4 && a.pi6 == b.pi6 &&
         a.pi7 == b.pi7 && a.pi8 == b.pi8 && a.pi9 == b.pi9 && a.pi1_left == b.pi1_left &&
         a.pi2_left == b.pi2_left && a.pi3_left == b.pi3_left && a.pi4_left == b.pi4_left &&
         a.pi6_left == b.pi6_left && a.pi7_left == b.pi7_left && a.n1 == b.n1 && a.n2 == b.n2 &&
         a.noise_y == b.noise_y && a.noise_u == b.noise_u;
}

void check_key(const KeySet& key, bool require_mask_rank) {
  const KeyDims& d = key.dims;
  const PlantDims& p = key.plant;
  require_dims(key.pi1, d.ny, p.n_y, "Pi1");
  require_dims(key.pi2, d.nu, p.n_u, "Pi2");
  require_dims(key.pi3, d.nx, p.n_x, "Pi3");
  require_dims(key.pi4, d.na, 1, "Pi4");
  require_dims(key.pi6, d.nz, 1, "Pi6");
  require_dims(key.pi7, d.nr, d.ny, "Pi7");
  require_dims(key.pi8, d.nz, d.ny, "Pi8");
  require_dims(key.pi9, d.na, d.ny, "Pi9");
  check_left_inverse(key.pi1, key.pi1_left, "Pi1^L");
  check_left_inverse(key.pi2, key.pi2_left, "Pi2^L");
  check_left_inverse(key.pi3, key.pi3_left, "Pi3^L");
  check_left_inverse(key.pi4, key.pi4_left, "Pi4^L");
  check_left_inverse(key.pi6, key.pi6_left, "Pi6^L");
  check_left_inverse(key.pi7, key.pi7_left, "Pi7^L");
  check_kernel(key.pi1_left, key.n1, "N1");
  check_kernel(key.pi2_left, key.n2, "N2");
  if (require_mask_rank && (!has_full_rank(key.pi8) || !has_full_rank(key.pi9))) {
    throw Error(ErrorCode::kRankDeficient, "Pi8 and Pi9 must have full rank");
  }
}

KeySet keygen(const KeyDims& dims, const PlantDims& plant, std::uint64_t seed,
              const KeygenOptions& options) {
  dims.validate(plant);
  if (!(options.scale_small > 0.0) || !(options.scale_large > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "key scales must be positive");
  }
  RandomStream rng(seed, StreamId::kKey);
  for (int attempt = 0; attempt <= options.max_resamples; ++attempt) {
    KeySet key;
    key.dims = dims;
    key.plant = plant;
    key.seed = seed;
    key.noise_y = options.noise_y;
    key.noise_u = options.noise_u;

    const double small = options.scale_small;
    const double large = options.scale_large;
    key.pi1 = rng.uniform_matrix(dims.ny, plant.n_y, small);
    key.pi2 = rng.uniform_matrix(dims.nu, plant.n_u, small);
    key.pi3 = rng.uniform_matrix(dims.nx, plant.n_x, small);
    key.pi4 = rng.uniform_matrix(dims.na, 1, small);
    key.pi6 = rng.uniform_matrix(dims.nz, 1, small);
    key.pi7 = rng.uniform_matrix(dims.nr, dims.ny, small);
    key.pi8 = rng.uniform_matrix(dims.nz, dims.ny, large);
    key.pi9 = rng.uniform_matrix(dims.na, dims.ny, large);

    try {
      key.pi1_left = left_inverse(key.pi1);
      key.pi2_left = left_inverse(key.pi2);
      key.pi3_left = left_inverse(key.pi3);
      key.pi4_left = left_inverse(key.pi4);
      key.pi6_left = left_inverse(key.pi6);
      key.pi7_left = left_inverse(key.pi7);
      key.n1 = kernel_basis(key.pi1_left);
      key.n2 = kernel_basis(key.pi2_left);
      check_key(key);
      return key;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankDeficient) throw;
    }
  }
  throw Error(ErrorCode::kRankRetryExhausted,
              "no full-rank key after " + std::to_string(options.max_resamples) + " resamples");
}

KeySet identity_padding_key(const KeyDims& dims, const PlantDims& plant) {
  dims.validate(plant);
  KeySet key;
  key.dims = dims;
  key.plant = plant;
  key.noise_y = {0.0, 0.0};
  key.noise_u = {0.0, 0.0};
  key.pi1 = padded_identity(dims.ny, plant.n_y);
  key.pi2 = padded_identity(dims.nu, plant.n_u);
  key.pi3 = padded_identity(dims.nx, plant.n_x);
  key.pi4 = padded_identity(dims.na, 1);
  key.pi6 = padded_identity(dims.nz, 1);
  key.pi7 = padded_identity(dims.nr, dims.ny);
  key.pi8 = Mat::Zero(dims.nz, dims.ny);
  key.pi9 = Mat::Zero(dims.na, dims.ny);
  key.pi1_left = key.pi1.transpose();
  key.pi2_left = key.pi2.transpose();
  key.pi3_left = key.pi3.transpose();
  key.pi4_left = key.pi4.transpose();
  key.pi6_left = key.pi6.transpose();
  key.pi7_left = key.pi7.transpose();
  key.n1 = Mat::Zero(dims.ny, dims.ny - plant.n_y);
  key.n1.bottomRows(dims.ny - plant.n_y).setIdentity();
  key.n2 = Mat::Zero(dims.nu, dims.nu - plant.n_u);
  key.n2.bottomRows(dims.nu - plant.n_u).setIdentity();
  return key;
}

Vec draw_s1(const KeySet& key, RandomStream& rng) {
  return draw_noise(key.noise_y, key.n1.cols(), rng);
}

Vec draw_s2(const KeySet& key, RandomStream& rng) {
  return draw_noise(key.noise_u, key.n2.cols(), rng);
}

Vec encode_y(const KeySet& key, const Vec& y, const Vec& s1) {
  require_size(y, key.plant.n_y, "y");
  require_size(s1, key.n1.cols(), "s1");
  return key.pi1 * y + key.n1 * s1;
}

Vec encode_y(const KeySet& key, const Vec& y, RandomStream& rng) {
  return encode_y(key, y, draw_s1(key, rng));
}

Vec encode_u(const KeySet& key, const Vec& u, const Vec& s2) {
  require_size(u, key.plant.n_u, "u");
  require_size(s2, key.n2.cols(), "s2");
  return key.pi2 * u + key.n2 * s2;
}

Vec encode_u(const KeySet& key, const Vec& u, RandomStream& rng) {
  return encode_u(key, u, draw_s2(key, rng));
}

Vec encode_alarm(const KeySet& key, bool alarm, const Vec& ytil) {
  require_size(ytil, key.dims.ny, "ytil");
  Vec atil = key.pi9 * ytil;
  if (alarm) atil += key.pi4.col(0);
  return atil;
}

double decode_alarm_raw(const KeySet& key, const Vec& atil, const Vec& ytil) {
  require_size(atil, key.dims.na, "atil");
  require_size(ytil, key.dims.ny, "ytil");
  const Vec masked = key.pi9 * ytil;
  return key.pi4_left.row(0).dot(atil - masked);
}

bool decode_alarm(const KeySet& key, const Vec& atil, const Vec& ytil) {
  const double raw = decode_alarm_raw(key, atil, ytil);
  if (std::abs(raw) <= kDecodeTol) return false;
  if (std::abs(raw - 1.0) <= kDecodeTol) return true;
  throw Error(ErrorCode::kDecodeDrift,
              "decoded alarm " + std::to_string(raw) + " is not within tolerance of 0 or 1");
}

EncodedConfig build_encoded_config(const KeySet& key, const SystemModel& model,
                                   const DetectorDesign& design) {
  const PlantDims plant = PlantDims::of(model);
  if (!(plant == key.plant)) {
    throw Error(ErrorCode::kDimensionMismatch, "key was generated for different plant dimensions");
  }
  require_dims(design.L, plant.n_x, plant.n_y, "L");
  require_dims(design.sigma_inv, plant.n_y, plant.n_y, "Sigma^-1");

  EncodedConfig c;
  c.F1 = key.pi3 * (model.A - design.L * model.C) * key.pi3_left;
  c.F2 = key.pi3 * model.B * key.pi2_left;
  c.F3 = key.pi3 * design.L * key.pi1_left;
  c.H1 = key.pi7;
  c.H2 = key.pi7 * key.pi1 * model.C * key.pi3_left;
  // Sigma^-1 = R' R, so W = M' M with M = R Pi1^L Pi7^L.  From the thin SVD
  // M = U S V', the symmetric root of W is V S V'.
  const Mat chol_inv = Eigen::LLT<Mat>(design.sigma_inv).matrixU();
  const Mat M = chol_inv * key.pi1_left * key.pi7_left;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinV);
  const Mat& V = svd.matrixV();
  c.W_root = V * svd.singularValues().asDiagonal() * V.transpose();
  c.W_root = 0.5 * (c.W_root + c.W_root.transpose());
  c.pi6 = key.pi6.col(0);
  c.pi6_left = key.pi6_left.row(0).transpose();
  c.pi8 = key.pi8;
  c.pi4 = key.pi4.col(0);
  c.pi9 = key.pi9;
  c.alpha = design.alpha;
  c.xhat0 = key.pi3 * model.mu1;
  return c;
}

}  // namespace iidetect
