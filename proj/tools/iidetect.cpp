// iidetect: command line front end for design, key generation, simulation,
// false alarm calibration, the reactor case study and the networked demo.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "iidetect/coding.hpp"
#include "iidetect/detector.hpp"
#include "iidetect/error.hpp"
#include "iidetect/experiment.hpp"
#include "iidetect/net.hpp"
#include "iidetect/reactor.hpp"
#include "iidetect/serialize.hpp"

namespace {

using iidetect::json;

struct Options {
  std::string model = "reactor";
  double astar = iidetect::kReactorAStar;
  std::int64_t horizon = 500;
  std::uint64_t seed = 1;
  std::int64_t fault_onset = 0;  // 0: no fault
  double fault_value = iidetect::kReactorFaultValue;
  std::string dims = "8,4,4,4,2,2";
  double scale_small = 0.1;
  double scale_large = 100.0;
  std::string mode = "local";
  std::string addr;
  std::string out;
  int seeds = 10;
  std::optional<double> alpha;
  std::int64_t burn_in = 100;
  bool deterministic = false;
};

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

iidetect::SystemModel load_model(const std::string& name) {
  if (name == "reactor") return iidetect::reactor_model(iidetect::ReactorNoise::kDerived);
  if (name == "reactor-printed") return iidetect::reactor_model(iidetect::ReactorNoise::kAsPrinted);
  return iidetect::model_from_json(iidetect::read_json_file(name));
}

iidetect::KeyDims parse_dims(const std::string& text) {
  std::vector<iidetect::Index> v;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) v.push_back(std::stol(cell));
  if (v.size() != 6) {
    throw iidetect::Error(iidetect::ErrorCode::kInvalidArgument,
                          "--dims expects nx,ny,nu,nr,nz,na");
  }
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

iidetect::ExperimentConfig experiment_config(const Options& o) {
  iidetect::ExperimentConfig cfg;
  cfg.model = load_model(o.model);
  cfg.a_star = o.astar;
  cfg.alpha_override = o.alpha;
  cfg.horizon = o.horizon;
  cfg.seed = o.seed;
  if (o.fault_onset > 0) {
    cfg.fault = iidetect::AnomalyProfile::step(
        o.fault_onset, iidetect::Vec::Constant(cfg.model.n_delta(), o.fault_value));
  }
  cfg.dims = parse_dims(o.dims);
  cfg.key_options.scale_small = o.scale_small;
  cfg.key_options.scale_large = o.scale_large;
  cfg.burn_in = o.burn_in;
  if (o.deterministic) cfg.noise = iidetect::NoiseMode::kDeterministic;
  return cfg;
}

json summary_json(const iidetect::ExperimentResult& r, const iidetect::ExperimentConfig& cfg) {
  const auto& s = r.summary;
  return {
      {"alpha", r.design.alpha},
      {"steps", s.steps},
      {"burn_in", s.burn_in},
      {"seed", cfg.seed},
      {"fault_onset", cfg.fault.kind == iidetect::AnomalyProfile::Kind::kStep ? cfg.fault.onset : 0},
      {"input", "50*cos(0.5k)^2 broadcast to all input channels"},
      {"dims", {{"n_y", cfg.model.n_y()}, {"ny_tilde", r.config.ny_tilde()},
                {"n_a", 1}, {"na_tilde", r.config.na_tilde()}}},
      {"pre_fault_steps", s.pre_fault_steps},
      {"far_pre_fault", s.far_pre_fault},
      {"mean_z_pre_fault", s.mean_z_pre_fault},
      {"var_z_pre_fault", s.var_z_pre_fault},
      {"detection_rate", s.detection_rate},
      {"alarm_rate_post_fault", s.alarm_rate_post_fault},
      {"max_manifold_error", s.max_manifold_error},
      {"max_zeta_error", s.max_zeta_error},
      {"max_residual_error", s.max_residual_error},
      {"max_decode_error", s.max_decode_error},
      {"alarm_mismatches", s.alarm_mismatches},
      {"boundary_steps", s.boundary_steps},
      {"plain_alarms", s.plain_alarms},
  };
}

void write_csv(const std::string& path, const std::vector<iidetect::TraceRecord>& trace) {
  if (path.empty()) return;
  if (path == "-") {
    iidetect::write_trace_csv(std::cout, trace);
    return;
  }
  std::ofstream out(path);
  if (!out) throw iidetect::Error(iidetect::ErrorCode::kInvalidArgument, "cannot write " + path);
  iidetect::write_trace_csv(out, trace);
}

void print_json(const json& j, const Options& o) {
  // With the trace going to stdout the summary moves to stderr.
  (o.out == "-" ? std::cerr : std::cout) << j.dump(2) << '\n';
}

int cmd_design(const Options& o) {
  const auto model = load_model(o.model);
  const auto d = iidetect::design_detector(model, o.astar);
  const Eigen::IOFormat fmt(6, 0, "  ", "\n", "  ");
  std::cout << "L =\n" << d.L.format(fmt) << "\nP =\n" << d.P.format(fmt) << "\nSigma =\n"
            << d.sigma.format(fmt) << "\nalpha = " << iidetect::format_double(d.alpha)
            << "\ndare: " << d.dare_iterations << " iterations, residual "
            << d.dare_residual << '\n';
  if (!o.out.empty()) iidetect::write_json_file(o.out, iidetect::to_json(d));
  return 0;
}

int cmd_keygen(const Options& o) {
  const auto model = load_model(o.model);
  iidetect::KeygenOptions ko;
  ko.scale_small = o.scale_small;
  ko.scale_large = o.scale_large;
  const auto key = iidetect::keygen(parse_dims(o.dims), iidetect::PlantDims::of(model), o.seed, ko);
  const auto design = iidetect::design_detector(model, o.astar);
  const auto config = iidetect::build_encoded_config(key, model, design);
  const json j{{"key", iidetect::to_json(key)}, {"config", iidetect::to_json(config)}};
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    iidetect::write_json_file(o.out, j);
    std::cout << "wrote key and encoded config to " << o.out << '\n';
  }
  return 0;
}

int run_and_report(const Options& o, bool networked, const iidetect::net::Address* remote) {
  const auto cfg = experiment_config(o);
  iidetect::ExperimentResult r;
  if (!networked) {
    r = iidetect::run_experiment_local(cfg);
  } else if (remote) {
    r = iidetect::run_experiment_networked(cfg, *remote);
  } else {
    // Self-contained networked run against an in-process server on an
    // ephemeral loopback port.
    iidetect::net::Server server(iidetect::net::Address{"127.0.0.1", 0});
    std::jthread serving([&] { server.run(); });
    r = iidetect::run_experiment_networked(cfg, {"127.0.0.1", server.port()});
    server.stop();
  }
  write_csv(o.out, r.trace);
  json j = summary_json(r, cfg);
  j["mode"] = networked ? "networked" : "local";
  print_json(j, o);
  return 0;
}

int cmd_simulate(const Options& o) {
  if (o.mode != "local" && o.mode != "networked") {
    throw iidetect::Error(iidetect::ErrorCode::kInvalidArgument, "--mode must be local or networked");
  }
  if (o.mode == "networked" && !o.addr.empty()) {
    const auto remote = iidetect::net::resolve_address(o.addr);
    return run_and_report(o, true, &remote);
  }
  return run_and_report(o, o.mode == "networked", nullptr);
}

int cmd_client(const Options& o) {
  const auto remote = iidetect::net::resolve_address(o.addr);
  return run_and_report(o, true, &remote);
}

int cmd_casestudy(const Options& o) {
  const auto cs = iidetect::run_casestudy(o.seed, o.horizon);
  const std::filesystem::path dir = o.out.empty() ? "casestudy" : o.out;
  std::filesystem::create_directories(dir);
  write_csv((dir / "trace.csv").string(), cs.run.trace);
  iidetect::write_json_file(dir / "design_derived.json", iidetect::to_json(cs.derived_design));
  iidetect::write_json_file(dir / "design_as_printed.json",
                            iidetect::to_json(cs.as_printed_design));
  json j = summary_json(cs.run, iidetect::casestudy_config(o.seed, o.horizon));
  j["alpha_as_printed"] = cs.as_printed_design.alpha;
  j["sigma11_derived"] = cs.derived_design.sigma(0, 0);
  j["sigma11_as_printed"] = cs.as_printed_design.sigma(0, 0);
  iidetect::write_json_file(dir / "summary.json", j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_far(const Options& o) {
  const auto model = load_model(o.model);
  const auto rep = iidetect::estimate_false_alarm_rate(model, o.astar, o.horizon, o.seeds, o.seed,
                                                       o.alpha, o.burn_in);
  const json j{{"A_star", o.astar}, {"alpha", rep.alpha},       {"steps_per_seed", o.horizon},
               {"seeds", o.seeds},  {"per_seed", rep.per_seed}, {"mean", rep.mean},
               {"stderr", rep.stderr_}};
  std::cout << j.dump(2) << '\n';
  if (!o.out.empty()) iidetect::write_json_file(o.out, j);
  return 0;
}

int cmd_serve(const Options& o) {
  const auto address = iidetect::net::resolve_address(o.addr);
  iidetect::net::Server server(address);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::jthread watcher([&](std::stop_token st) {
    while (!st.stop_requested() && !g_interrupted) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    server.stop();
  });
  std::cout << "listening on " << address.host << ":" << server.port() << std::endl;
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anomaly detection on encoded signals via immersion"};
  app.require_subcommand(1);
  Options o;

  const auto unit_open = CLI::Validator(
      [](std::string& s) -> std::string {
        const double v = std::stod(s);
        return v > 0.0 && v < 1.0 ? "" : "A_star must lie in (0, 1)";
      },
      "(0,1)");

  const auto add_model = [&](CLI::App* c) {
    c->add_option("--model", o.model, "reactor, reactor-printed or a model JSON file");
    c->add_option("--astar", o.astar, "desired false alarm rate")->check(unit_open);
  };
  const auto add_key = [&](CLI::App* c) {
    c->add_option("--seed", o.seed, "seed");
    c->add_option("--dims", o.dims, "encoded dimensions nx,ny,nu,nr,nz,na");
    c->add_option("--scale-small", o.scale_small, "half-width of the small key blocks")
        ->check(CLI::PositiveNumber);
    c->add_option("--scale-large", o.scale_large, "half-width of the large key blocks")
        ->check(CLI::PositiveNumber);
  };
  const auto add_run = [&](CLI::App* c) {
    add_model(c);
    add_key(c);
    c->add_option("--horizon", o.horizon, "number of steps")->check(CLI::PositiveNumber);
    c->add_option("--fault-onset", o.fault_onset, "first faulty step (0: no fault)")
        ->check(CLI::NonNegativeNumber);
    c->add_option("--fault-value", o.fault_value, "step fault magnitude");
    c->add_option("--alpha", o.alpha, "override the threshold");
    c->add_option("--burn-in", o.burn_in, "steps excluded from pre-fault statistics");
    c->add_flag("--deterministic", o.deterministic, "zero process and measurement noise");
    c->add_option("--out", o.out, "CSV trace path, '-' for stdout");
  };

  auto* design = app.add_subcommand("design", "compute L, P, Sigma and alpha");
  add_model(design);
  design->add_option("--out", o.out, "design JSON path");

  auto* kg = app.add_subcommand("keygen", "generate a key and the encoded configuration");
  add_model(kg);
  add_key(kg);
  kg->add_option("--out", o.out, "JSON path");

  auto* sim = app.add_subcommand("simulate", "run plant, detector and encoded pipeline");
  add_run(sim);
  sim->add_option("--mode", o.mode, "local or networked")
      ->check(CLI::IsMember({"local", "networked"}));
  sim->add_option("--addr", o.addr, "remote station host:port (networked mode)");

  auto* client = app.add_subcommand("client", "run the user side against a remote station");
  add_run(client);
  client->add_option("--addr", o.addr, "remote station host:port");

  auto* cs = app.add_subcommand("casestudy", "reactor case study");
  std::int64_t cs_horizon = 200;
  cs->add_option("--seed", o.seed, "seed");
  cs->add_option("--horizon", cs_horizon, "number of steps")->check(CLI::PositiveNumber);
  cs->add_option("--out", o.out, "output directory");

  auto* far = app.add_subcommand("far", "Monte Carlo false alarm rate");
  add_model(far);
  std::int64_t far_horizon = 50000;
  far->add_option("--horizon", far_horizon, "steps per seed after burn-in")
      ->check(CLI::PositiveNumber);
  far->add_option("--seed", o.seed, "first seed");
  far->add_option("--seeds", o.seeds, "number of seeds")->check(CLI::Range(1, 100000));
  far->add_option("--alpha", o.alpha, "override the threshold");
  far->add_option("--burn-in", o.burn_in, "steps discarded per seed");
  far->add_option("--out", o.out, "report JSON path");

  auto* serve = app.add_subcommand("serve", "run the remote station");
  serve->add_option("--addr", o.addr, "listen host:port (default $II_DETECT_ADDR)");

  CLI11_PARSE(app, argc, argv);
  if (cs->parsed()) o.horizon = cs_horizon;
  if (far->parsed()) o.horizon = far_horizon;

  try {
    if (design->parsed()) return cmd_design(o);
    if (kg->parsed()) return cmd_keygen(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (client->parsed()) return cmd_client(o);
    if (cs->parsed()) return cmd_casestudy(o);
    if (far->parsed()) return cmd_far(o);
    if (serve->parsed()) return cmd_serve(o);
  } catch (const iidetect::Error& e) {
    std::cerr << "error [" << iidetect::to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
