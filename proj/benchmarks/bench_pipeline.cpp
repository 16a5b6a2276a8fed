#include <benchmark/benchmark.h>

#include "iidetect/coding.hpp"
#include "iidetect/detector.hpp"
#include "iidetect/experiment.hpp"
#include "iidetect/reactor.hpp"
#include "iidetect/target.hpp"
#include "iidetect/wire.hpp"

using namespace iidetect;

static void BM_DareReactor(benchmark::State& state) {
  const SystemModel model = reactor_model();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dare_solve(model.A, model.C, model.sigma_t, model.sigma_w));
  }
}
BENCHMARK(BM_DareReactor);

static void BM_Keygen(benchmark::State& state) {
  const PlantDims plant = PlantDims::of(reactor_model());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(keygen(KeyDims{}, plant, ++seed));
}
BENCHMARK(BM_Keygen);

static void BM_StandardStep(benchmark::State& state) {
  const SystemModel model = reactor_model();
  const DetectorDesign design = design_detector(model, kReactorAStar);
  StandardDetector det(model, design);
  const Vec u = reactor_input(1, model.n_u());
  const Vec y = model.mu1.head(model.n_y());
  for (auto _ : state) benchmark::DoNotOptimize(det.step(u, y));
}
BENCHMARK(BM_StandardStep);

static void BM_TargetStep(benchmark::State& state) {
  const SystemModel model = reactor_model();
  const DetectorDesign design = design_detector(model, kReactorAStar);
  const KeySet key = keygen(KeyDims{}, PlantDims::of(model), 1);
  const EncodedConfig cfg = build_encoded_config(key, model, design);
  TargetDetector target(cfg);
  RandomStream rng(1, StreamId::kEncoding);
  const Vec util = encode_u(key, reactor_input(1, model.n_u()), rng);
  const Vec ytil = encode_y(key, Vec::Ones(model.n_y()), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(target.step(util, ytil));
    target.set_state(target_init(cfg));
  }
}
BENCHMARK(BM_TargetStep);

static void BM_PipelineLoopback(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.horizon = state.range(0);
  cfg.record_trace = false;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_local(cfg).summary);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PipelineLoopback)->Arg(1000);

static void BM_FrameCodec(benchmark::State& state) {
  const Vec ytil = Vec::Random(4);
  const Vec util = Vec::Random(4);
  for (auto _ : state) {
    const wire::Bytes bytes = wire::encode_frame(wire::make_step_request({7, util, ytil}));
    benchmark::DoNotOptimize(wire::parse_step_request(wire::decode_frame(bytes)));
  }
}
BENCHMARK(BM_FrameCodec);

BENCHMARK_MAIN();
