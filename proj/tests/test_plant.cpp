#include <gtest/gtest.h>

#include <cmath>

#include "iidetect/error.hpp"
#include "iidetect/plant.hpp"
#include "iidetect/reactor.hpp"
#include "iidetect/serialize.hpp"

using namespace iidetect;

namespace {

std::vector<Vec> run(const SystemModel& m, NoiseMode mode, std::uint64_t seed, int steps,
                     const std::function<Vec(int)>& u, const AnomalyProfile& fault = {}) {
  Plant plant(m, seed, mode);
  std::vector<Vec> out;
  for (int k = 1; k <= steps; ++k) {
    out.push_back(plant.step(u(k), fault.at(k, m.n_delta())));
    out.push_back(plant.state());
  }
  return out;
}

}  // namespace

TEST(Plant, DeterministicInitIsMean) {
  const SystemModel m = reactor_model();
  Plant plant(m, 42, NoiseMode::kDeterministic);
  EXPECT_EQ(plant.state(), m.mu1);
  EXPECT_EQ(plant.k(), 1);
}

TEST(Plant, NoiselessStep) {
  const SystemModel m = reactor_model();
  Plant plant(m, 1, NoiseMode::kDeterministic);
  const Vec y = plant.step(Vec::Zero(m.n_u()), Vec::Zero(m.n_delta()));
  EXPECT_LE((y - m.C * m.mu1).norm(), 1e-14);
  EXPECT_LE((plant.state() - m.A * m.mu1).norm(), 1e-14);
  EXPECT_EQ(plant.k(), 2);
}

TEST(Plant, FaultShiftsOutputAndState) {
  const SystemModel m = reactor_model();
  const Vec d = Vec::Constant(m.n_delta(), 0.9);
  Plant clean(m, 1, NoiseMode::kDeterministic);
  Plant faulty(m, 1, NoiseMode::kDeterministic);
  const Vec u = reactor_input(1, m.n_u());
  const Vec y0 = clean.step(u, Vec::Zero(m.n_delta()));
  const Vec y1 = faulty.step(u, d);
  EXPECT_LE((y1 - y0 - m.F * d).norm(), 1e-12);
  EXPECT_LE((faulty.state() - clean.state() - m.D * d).norm(), 1e-12);
}

TEST(Plant, InitialStateMonteCarloMean) {
  const SystemModel m = reactor_model();
  const int n = 100000;
  Vec sum = Vec::Zero(m.n_x());
  for (int i = 0; i < n; ++i) sum += Plant(m, static_cast<std::uint64_t>(i)).state();
  const Vec mean = sum / n;
  for (Index i = 0; i < m.n_x(); ++i) {
    EXPECT_NEAR(mean(i), m.mu1(i), 3 * std::sqrt(m.sigma1(i, i) / n)) << i;
  }
}

TEST(Plant, OutputNoiseCovariance) {
  const SystemModel m = reactor_model();
  Plant plant(m, 9);
  const int n = 100000;
  Mat acc = Mat::Zero(m.n_y(), m.n_y());
  const Vec zero_fault = Vec::Zero(m.n_delta());
  for (int k = 1; k <= n; ++k) {
    const Vec x = plant.state();
    const Vec w = plant.step(reactor_input(k, m.n_u()), zero_fault) - m.C * x;
    acc += w * w.transpose();
  }
  const Mat cov = acc / n;
  EXPECT_LE((cov - m.sigma_w).norm(), 0.05 * m.sigma_w.norm());
}

TEST(Plant, Superposition) {
  const SystemModel m = reactor_model();
  const auto u1 = [&](int k) { return reactor_input(k, m.n_u()); };
  const auto u2 = [&](int k) { return Vec::Constant(m.n_u(), std::sin(0.3 * k)); };
  const auto u12 = [&](int k) { return Vec(u1(k) + u2(k)); };
  const auto u0 = [&](int) { return Vec::Zero(m.n_u()); };
  const auto a = run(m, NoiseMode::kDeterministic, 0, 200, u1);
  const auto b = run(m, NoiseMode::kDeterministic, 0, 200, u2);
  const auto ab = run(m, NoiseMode::kDeterministic, 0, 200, u12);
  const auto z = run(m, NoiseMode::kDeterministic, 0, 200, u0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LE((ab[i] - (a[i] + b[i] - z[i])).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Plant, SeedDeterminism) {
  const SystemModel m = reactor_model();
  const auto u = [&](int k) { return reactor_input(k, m.n_u()); };
  const auto fault = AnomalyProfile::step(20, Vec::Constant(1, 0.9));
  EXPECT_EQ(run(m, NoiseMode::kStochastic, 5, 300, u, fault),
            run(m, NoiseMode::kStochastic, 5, 300, u, fault));
  EXPECT_NE(run(m, NoiseMode::kStochastic, 5, 10, u), run(m, NoiseMode::kStochastic, 6, 10, u));
}

TEST(Plant, DimensionMismatch) {
  Plant plant(reactor_model(), 1);
  try {
    plant.step(Vec::Zero(2), Vec::Zero(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Plant, InvalidCovariance) {
  SystemModel m = reactor_model();
  m.sigma_w = -Mat::Identity(3, 3);
  try {
    Plant plant(m, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotPositiveDefinite);
  }
}

TEST(AnomalyProfile, StepOnsetInclusive) {
  const auto f = AnomalyProfile::step(20, Vec::Constant(1, 0.9));
  EXPECT_FALSE(f.active(19));
  EXPECT_TRUE(f.active(20));
  EXPECT_EQ(f.at(19, 1)(0), 0.0);
  EXPECT_EQ(f.at(20, 1)(0), 0.9);
  EXPECT_EQ(AnomalyProfile::none().at(50, 2), Vec::Zero(2));
}

TEST(ModelJson, RoundTrip) {
  for (auto noise : {ReactorNoise::kDerived, ReactorNoise::kAsPrinted}) {
    const SystemModel m = reactor_model(noise);
    const SystemModel back = model_from_json(json::parse(to_json(m).dump()));
    EXPECT_EQ(back.A, m.A);
    EXPECT_EQ(back.sigma_w, m.sigma_w);
    EXPECT_EQ(back.mu1, m.mu1);
  }
  json bad = to_json(reactor_model());
  bad["C"] = json::array({json::array({1.0, 2.0})});
  EXPECT_THROW(model_from_json(bad), Error);
}
