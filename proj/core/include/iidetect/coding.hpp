#pragma once

// User-side key material: random coding matrices, their left inverses, the
// kernel bases that carry the one-time noise, and the encode/decode maps
//   ytil = Pi1 y + N1 s1,   util = Pi2 u + N2 s2,   a = Pi4^L (atil - Pi9 ytil).
//
// A KeySet is secret.  Only the EncodedConfig built from it may be sent to
// the remote station.

#include <cstdint>

#include "iidetect/detector.hpp"
#include "iidetect/encoded_config.hpp"
#include "iidetect/numerics.hpp"
#include "iidetect/plant.hpp"
#include "iidetect/random.hpp"

namespace iidetect {

struct PlantDims {
  Index n_x = 0;
  Index n_y = 0;
  Index n_u = 0;

  static PlantDims of(const SystemModel& model) { return {model.n_x(), model.n_y(), model.n_u()}; }
  bool operator==(const PlantDims&) const = default;
};

/// Encoded dimensions (the "tilde" sizes).
struct KeyDims {
  Index nx = 8;
  Index ny = 4;
  Index nu = 4;
  Index nr = 4;
  Index nz = 2;
  Index na = 2;

  /// Throws kDimsInvalid unless nx > n_x, ny > n_y, nu > n_u, nr >= ny,
  /// nz > 1 and na > 1.
  void validate(const PlantDims& plant) const;
  bool operator==(const KeyDims&) const = default;
};

struct NoiseParams {
  double mean = 1e3;
  double stddev = 1e2;
  bool operator==(const NoiseParams&) const = default;
};

struct KeygenOptions {
  double scale_small = 0.1;
  double scale_large = 100.0;
  NoiseParams noise_y;
  NoiseParams noise_u;
  int max_resamples = 16;
};

struct KeySet {
  KeyDims dims;
  PlantDims plant;
  std::uint64_t seed = 0;

  Mat pi1, pi2, pi3, pi4, pi6, pi7, pi8, pi9;
  Mat pi1_left, pi2_left, pi3_left, pi4_left, pi6_left, pi7_left;
  Mat n1;  // basis of ker(Pi1^L)
  Mat n2;  // basis of ker(Pi2^L)

  NoiseParams noise_y;
  NoiseParams noise_u;
};

bool operator==(const KeySet& a, const KeySet& b);

KeySet keygen(const KeyDims& dims, const PlantDims& plant, std::uint64_t seed,
              const KeygenOptions& options = {});

/// Structured key with [I; 0] coding blocks, zero Pi8/Pi9 and no noise.  The
/// encoded pipeline then reduces to the zero-padded plaintext detector.
KeySet identity_padding_key(const KeyDims& dims, const PlantDims& plant);

/// Verifies the algebraic key invariants; throws kRankDeficient or
/// kDimensionMismatch.  `require_mask_rank` is false for structured keys.
void check_key(const KeySet& key, bool require_mask_rank = true);

Vec draw_s1(const KeySet& key, RandomStream& rng);
Vec draw_s2(const KeySet& key, RandomStream& rng);

Vec encode_y(const KeySet& key, const Vec& y, const Vec& s1);
Vec encode_y(const KeySet& key, const Vec& y, RandomStream& rng);
Vec encode_u(const KeySet& key, const Vec& u, const Vec& s2);
Vec encode_u(const KeySet& key, const Vec& u, RandomStream& rng);

/// Pi4 a + Pi9 ytil: what a correct remote station returns for alarm a.
Vec encode_alarm(const KeySet& key, bool alarm, const Vec& ytil);

inline constexpr double kDecodeTol = 1e-6;

/// Pi4^L (atil - Pi9 ytil) before rounding.
double decode_alarm_raw(const KeySet& key, const Vec& atil, const Vec& ytil);

/// Rounds the raw decode to {0, 1}; throws kDecodeDrift when it lies more
/// than kDecodeTol away from both.
bool decode_alarm(const KeySet& key, const Vec& atil, const Vec& ytil);

EncodedConfig build_encoded_config(const KeySet& key, const SystemModel& model,
                                   const DetectorDesign& design);

}  // namespace iidetect
