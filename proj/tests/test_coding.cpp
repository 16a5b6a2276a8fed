#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "iidetect/coding.hpp"
#include "iidetect/error.hpp"
#include "iidetect/reactor.hpp"
#include "iidetect/serialize.hpp"

using namespace iidetect;

namespace {

const SystemModel& reactor() {
  static const SystemModel m = reactor_model();
  return m;
}

PlantDims plant() { return PlantDims::of(reactor()); }

void expect_key_invariants(const KeySet& key) {
  const auto eye = [](Index n) { return Mat::Identity(n, n); };
  EXPECT_LE((key.pi1_left * key.pi1 - eye(key.pi1.cols())).norm(), 1e-9);
  EXPECT_LE((key.pi2_left * key.pi2 - eye(key.pi2.cols())).norm(), 1e-9);
  EXPECT_LE((key.pi3_left * key.pi3 - eye(key.pi3.cols())).norm(), 1e-9);
  EXPECT_LE((key.pi4_left * key.pi4 - eye(1)).norm(), 1e-9);
  EXPECT_LE((key.pi6_left * key.pi6 - eye(1)).norm(), 1e-9);
  EXPECT_LE((key.pi7_left * key.pi7 - eye(key.pi7.cols())).norm(), 1e-9);
  EXPECT_LE((key.pi1_left * key.n1).norm(), 1e-10);
  EXPECT_LE((key.pi2_left * key.n2).norm(), 1e-10);
  EXPECT_TRUE(has_full_column_rank(key.n1));
  EXPECT_TRUE(has_full_column_rank(key.n2));
  EXPECT_TRUE(has_full_rank(key.pi8));
  EXPECT_TRUE(has_full_rank(key.pi9));
}

}  // namespace

TEST(KeyDims, Validation) {
  KeyDims ok;
  EXPECT_NO_THROW(ok.validate(plant()));
  for (auto bad : {KeyDims{8, 3, 4, 4, 2, 2}, KeyDims{4, 4, 4, 4, 2, 2}, KeyDims{8, 4, 3, 4, 2, 2},
                   KeyDims{8, 4, 4, 3, 2, 2}, KeyDims{8, 4, 4, 4, 1, 2},
                   KeyDims{8, 4, 4, 4, 2, 1}}) {
    try {
      keygen(bad, plant(), 1);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDimsInvalid);
    }
  }
}

TEST(Keygen, CaseStudyDims) {
  const KeySet key = keygen(KeyDims{8, 4, 4, 4, 2, 2}, plant(), 1);
  EXPECT_EQ(key.pi1.rows(), 4);
  EXPECT_EQ(key.pi1.cols(), 3);
  EXPECT_EQ(key.pi3.rows(), 8);
  EXPECT_EQ(key.pi4.rows(), 2);
  EXPECT_EQ(key.n1.cols(), 1);
  EXPECT_EQ(key.n2.cols(), 1);
  expect_key_invariants(key);
}

TEST(Keygen, ScalesRespected) {
  KeygenOptions opts;
  opts.scale_small = 0.2;
  opts.scale_large = 50.0;
  const KeySet key = keygen(KeyDims{}, plant(), 3, opts);
  for (const Mat* m : {&key.pi1, &key.pi2, &key.pi3, &key.pi4, &key.pi6, &key.pi7}) {
    EXPECT_LE(m->cwiseAbs().maxCoeff(), 0.2);
  }
  EXPECT_LE(key.pi8.cwiseAbs().maxCoeff(), 50.0);
  EXPECT_LE(key.pi9.cwiseAbs().maxCoeff(), 50.0);
  EXPECT_GT(key.pi9.cwiseAbs().maxCoeff(), 0.2);
}

TEST(Keygen, Deterministic) {
  EXPECT_EQ(keygen(KeyDims{}, plant(), 77), keygen(KeyDims{}, plant(), 77));
  EXPECT_FALSE(keygen(KeyDims{}, plant(), 77) == keygen(KeyDims{}, plant(), 78));
}

TEST(Keygen, ThousandKeysHoldInvariants) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const KeySet key = keygen(KeyDims{}, plant(), seed);
    EXPECT_NO_THROW(check_key(key));
    expect_key_invariants(key);
  }
}

TEST(Keygen, LargerDims) {
  const KeySet key = keygen(KeyDims{10, 6, 5, 7, 3, 4}, plant(), 5);
  EXPECT_EQ(key.n1.cols(), 3);
  EXPECT_EQ(key.n2.cols(), 2);
  expect_key_invariants(key);
}

TEST(Keygen, JsonRoundTrip) {
  const KeySet key = keygen(KeyDims{}, plant(), 12);
  EXPECT_EQ(key_from_json(json::parse(to_json(key).dump())), key);
}

TEST(Encode, ZeroNoiseAndLeftInverse) {
  const KeySet key = keygen(KeyDims{}, plant(), 2);
  RandomStream rng(2, StreamId::kEncoding);
  const Vec y = rng.normal_vector(3);
  const Vec u = rng.normal_vector(3);
  EXPECT_LE((encode_y(key, y, Vec::Zero(1)) - key.pi1 * y).norm(), 1e-15);
  EXPECT_LE((encode_u(key, u, Vec::Zero(1)) - key.pi2 * u).norm(), 1e-15);
  for (int i = 0; i < 100; ++i) {
    const Vec yt = encode_y(key, y, rng);
    const Vec ut = encode_u(key, u, rng);
    EXPECT_LE((key.pi1_left * yt - y).norm(), 1e-9 * yt.norm());
    EXPECT_LE((key.pi2_left * ut - u).norm(), 1e-9 * ut.norm());
  }
}

TEST(Encode, ZeroIsRandomized) {
  const KeySet key = keygen(KeyDims{}, plant(), 2);
  RandomStream rng(9, StreamId::kEncoding);
  const Vec a = encode_y(key, Vec::Zero(3), rng);
  const Vec b = encode_y(key, Vec::Zero(3), rng);
  EXPECT_GT(a.norm(), 1.0);
  EXPECT_NE(a, b);
  EXPECT_NE(encode_u(key, Vec::Ones(3), rng), encode_u(key, Vec::Ones(3), rng));
}

TEST(Encode, DimensionMismatch) {
  const KeySet key = keygen(KeyDims{}, plant(), 2);
  RandomStream rng(1);
  EXPECT_THROW(encode_y(key, Vec::Zero(4), rng), Error);
  EXPECT_THROW(encode_u(key, Vec::Zero(2), rng), Error);
}

TEST(Encode, OneTimeRandomness) {
  const KeySet key = keygen(KeyDims{10, 6, 5, 6, 2, 2}, plant(), 4);
  RandomStream rng(4, StreamId::kEncoding);
  const Vec y = Vec::Constant(3, 5.0);
  const int n = 10000;
  std::vector<Vec> samples;
  Vec mean = Vec::Zero(6);
  for (int i = 0; i < n; ++i) {
    samples.push_back(encode_y(key, y, rng));
    mean += samples.back();
  }
  mean /= n;
  Mat cov = Mat::Zero(6, 6);
  for (const Vec& s : samples) cov += (s - mean) * (s - mean).transpose();
  cov /= n - 1;
  // N1 has orthonormal columns, so the restriction of N1 N1' to its range is I.
  const Mat restricted = key.n1.transpose() * cov * key.n1;
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(restricted).eigenvalues().minCoeff();
  const double sd = key.noise_y.stddev;
  EXPECT_GE(min_eig, 0.5 * sd * sd);
}

TEST(Decode, ExamplesAndRoundTrip) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const KeySet key = keygen(KeyDims{}, plant(), seed);
    RandomStream rng(seed, StreamId::kEncoding);
    const Vec yt = encode_y(key, 10.0 * rng.normal_vector(3), rng);
    EXPECT_TRUE(decode_alarm(key, key.pi4 + key.pi9 * yt, yt));
    EXPECT_FALSE(decode_alarm(key, key.pi9 * yt, yt));
    for (bool a : {false, true}) EXPECT_EQ(decode_alarm(key, encode_alarm(key, a, yt), yt), a);
  }
}

TEST(Decode, PerturbationDrifts) {
  const KeySet key = keygen(KeyDims{}, plant(), 6);
  RandomStream rng(6);
  const Vec yt = encode_y(key, rng.normal_vector(3), rng);
  int drifts = 0;
  for (int i = 0; i < 100; ++i) {
    const Vec atil = encode_alarm(key, i % 2, yt) + 1e-3 * rng.normal_vector(2);
    try {
      decode_alarm(key, atil, yt);
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDecodeDrift);
      ++drifts;
    }
  }
  // Pi4^L has entries of order 1/scale_small, so 1e-3 noise moves the raw
  // value by about 1e-2 and every draw drifts.
  EXPECT_EQ(drifts, 100);
}

TEST(EncodedConfig, AlgebraicIdentities) {
  const SystemModel& m = reactor();
  const auto d = design_detector(m, 0.1);
  const KeySet key = keygen(KeyDims{}, plant(), 31);
  const EncodedConfig c = build_encoded_config(key, m, d);
  EXPECT_LE((key.pi3_left * c.F1 * key.pi3 - (m.A - d.L * m.C)).norm(), 1e-8);
  EXPECT_LE((key.pi3_left * c.F2 * key.pi2 - m.B).norm(), 1e-8);
  EXPECT_LE((key.pi3_left * c.F3 * key.pi1 - d.L).norm(), 1e-8);
  EXPECT_EQ(c.H1, key.pi7);
  EXPECT_LE((c.xhat0 - key.pi3 * m.mu1).norm(), 1e-14);
  const Mat W = c.W();
  EXPECT_LE((W - W.transpose()).norm(), 1e-12 * W.norm());
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Mat>(W).eigenvalues().minCoeff(), -1e-8 * W.norm());
  const Mat G = key.pi1_left * key.pi7_left;
  EXPECT_LE((W - G.transpose() * d.sigma_inv * G).norm(), 1e-8 * W.norm());
}

TEST(EncodedConfig, QuadraticFormMatchesPlaintext) {
  const SystemModel& m = reactor();
  const auto d = design_detector(m, 0.1);
  RandomStream rng(40);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const KeySet key = keygen(KeyDims{}, plant(), seed);
    const EncodedConfig c = build_encoded_config(key, m, d);
    const Vec r = 2.0 * rng.normal_vector(3);
    const Vec q = key.pi7 * key.pi1 * r;
    const double plain = r.dot(d.sigma_inv * r);
    EXPECT_NEAR((c.W_root * q).squaredNorm(), plain, 1e-9 * (1 + plain));
    EXPECT_NEAR(q.dot(c.W() * q), plain, 1e-8 * (1 + plain));
  }
}

TEST(EncodedConfig, IdentityPaddingReducesToPlaintext) {
  const SystemModel& m = reactor();
  const auto d = design_detector(m, 0.1);
  const KeySet key = identity_padding_key(KeyDims{}, plant());
  const EncodedConfig c = build_encoded_config(key, m, d);
  Mat F1 = Mat::Zero(8, 8);
  F1.topLeftCorner(4, 4) = m.A - d.L * m.C;
  EXPECT_LE((c.F1 - F1).norm(), 1e-14);
  Mat W = Mat::Zero(4, 4);
  W.topLeftCorner(3, 3) = d.sigma_inv;
  EXPECT_LE((c.W() - W).norm(), 1e-10);
  Vec x0 = Vec::Zero(8);
  x0.head(4) = m.mu1;
  EXPECT_EQ(c.xhat0, x0);
  EXPECT_EQ(c.pi8.norm(), 0.0);
  EXPECT_EQ(c.pi9.norm(), 0.0);
}

TEST(EncodedConfig, JsonRoundTrip) {
  const auto d = design_detector(reactor(), 0.1);
  const EncodedConfig c = build_encoded_config(keygen(KeyDims{}, plant(), 3), reactor(), d);
  EXPECT_EQ(config_from_json(json::parse(to_json(c).dump())), c);
}
