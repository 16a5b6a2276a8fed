#include <gtest/gtest.h>

#include <cmath>

#include "iidetect/coding.hpp"
#include "iidetect/error.hpp"
#include "iidetect/experiment.hpp"
#include "iidetect/reactor.hpp"
#include "iidetect/target.hpp"

using namespace iidetect;

namespace {

struct Fixture {
  SystemModel model = reactor_model();
  DetectorDesign design = design_detector(model, kReactorAStar);
  KeySet key = keygen(KeyDims{}, PlantDims::of(model), 13);
  EncodedConfig config = build_encoded_config(key, model, design);
};

}  // namespace

TEST(TargetInit, OnManifold) {
  Fixture f;
  EXPECT_EQ(target_init(f.config).xtil, f.key.pi3 * f.model.mu1);

  const KeySet pad = identity_padding_key(KeyDims{}, PlantDims::of(f.model));
  const EncodedConfig pc = build_encoded_config(pad, f.model, f.design);
  Vec expected = Vec::Zero(8);
  expected.head(4) = f.model.mu1;
  EXPECT_EQ(target_init(pc).xtil, expected);

  SystemModel zero_mean = f.model;
  zero_mean.mu1.setZero();
  EXPECT_EQ(target_init(build_encoded_config(f.key, zero_mean, f.design)).xtil, Vec::Zero(8));
}

TEST(TargetStep, AffineRelations) {
  Fixture f;
  StandardDetector plain(f.model, f.design);
  TargetDetector target(f.config);
  Plant plant(f.model, 13);
  RandomStream rng(13, StreamId::kEncoding);
  for (std::int64_t k = 1; k <= 2000; ++k) {
    const Vec u = reactor_input(k, 3);
    const Vec y = plant.step(u, Vec::Constant(1, k >= 20 ? 0.9 : 0.0));
    const Vec s1 = draw_s1(f.key, rng);
    const Vec s2 = draw_s2(f.key, rng);
    const Vec yt = encode_y(f.key, y, s1);
    const Vec ut = encode_u(f.key, u, s2);
    const StepDiag sd = plain.step(u, y);
    const TargetDiag td = target.step(ut, yt);
    const Vec rtil = f.key.pi7 * (f.key.pi1 * sd.r + f.key.n1 * s1);
    ASSERT_LE((td.rtil - rtil).norm(), 1e-8 * (1 + td.rtil.norm())) << k;
    ASSERT_LE((td.ztil - (f.key.pi6 * sd.z + f.key.pi8 * yt)).norm(),
              1e-8 * (1 + td.ztil.norm())) << k;
    ASSERT_LE(std::abs(td.zeta - sd.z), 1e-8 * (1 + sd.z)) << k;
    if (!in_boundary_band(sd.z, f.design.alpha)) {
      ASSERT_EQ(decode_alarm(f.key, td.atil, yt), sd.alarm) << k;
    }
    ASSERT_LE((target.state().xtil - f.key.pi3 * plain.xhat()).norm(),
              1e-6 * (1 + (f.key.pi3 * plain.xhat()).norm())) << k;
  }
}

TEST(TargetStep, OffManifoldErrorFollowsF1) {
  Fixture f;
  RandomStream rng(21);
  TargetState on = target_init(f.config);
  TargetState off = on;
  off.xtil += rng.normal_vector(8);
  for (int k = 1; k <= 50; ++k) {
    const Vec eps = off.xtil - on.xtil;
    const Vec ut = rng.normal_vector(4);
    const Vec yt = 100 * rng.normal_vector(4);
    target_step(f.config, on, ut, yt);
    target_step(f.config, off, ut, yt);
    const Vec expected = f.config.F1 * eps;
    EXPECT_LE((off.xtil - on.xtil - expected).norm(), 1e-8 * (1 + expected.norm())) << k;
  }
}

TEST(TargetStep, IdentityPaddingMatchesPlaintext) {
  Fixture f;
  ExperimentConfig cfg = casestudy_config(3, 3000);
  cfg.key = identity_padding_key(cfg.dims, PlantDims::of(cfg.model));
  const auto r = run_experiment_local(cfg);
  for (const auto& rec : r.trace) {
    ASSERT_LE(std::abs(rec.zeta - rec.z), 1e-12 * std::max(1.0, rec.z)) << rec.k;
    ASSERT_EQ(rec.ahat, rec.a) << rec.k;
    ASSERT_EQ(rec.ytil.head(3), rec.y);
    ASSERT_EQ(rec.ytil(3), 0.0);
  }
  EXPECT_EQ(r.summary.alarm_mismatches, 0);
}

TEST(TargetStep, DimensionMismatch) {
  Fixture f;
  TargetDetector t(f.config);
  EXPECT_THROW(t.step(Vec::Zero(3), Vec::Zero(4)), Error);
  EXPECT_THROW(t.step(Vec::Zero(4), Vec::Zero(5)), Error);
}

TEST(TargetStep, StrictThresholdBranch) {
  // A config whose threshold equals the recovered distance must not alarm.
  Fixture f;
  TargetState s = target_init(f.config);
  const Vec ut = Vec::Zero(4);
  const Vec yt = f.key.pi1 * (f.model.C * f.model.mu1);
  TargetState probe = s;
  const TargetDiag d0 = target_step(f.config, probe, ut, yt);
  EncodedConfig at_threshold = f.config;
  at_threshold.alpha = d0.zeta;
  const TargetDiag d1 = target_step(at_threshold, s, ut, yt);
  EXPECT_LE((d1.atil - f.key.pi9 * yt).norm(), 1e-9 * (1 + d1.atil.norm()));
}
