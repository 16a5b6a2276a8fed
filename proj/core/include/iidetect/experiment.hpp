#pragma once

// Harness-level orchestration: runs plant, plaintext detector and the encoded
// pipeline in lockstep, and computes the diagnostics that compare them.  The
// harness sees both sides; nothing here is part of the remote station.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iidetect/coding.hpp"
#include "iidetect/detector.hpp"
#include "iidetect/net.hpp"
#include "iidetect/plant.hpp"
#include "iidetect/reactor.hpp"
#include "iidetect/wire.hpp"

namespace iidetect {

/// Relative half-width of the band around alpha in which plaintext and
/// encoded alarms are allowed to disagree through rounding.
inline constexpr double kBoundaryBand = 1e-9;

bool in_boundary_band(double z, double alpha);

struct TraceRecord {
  std::int64_t k = 0;
  Vec y, ytil, u, util;
  double z = 0.0;
  double zeta = 0.0;
  bool a = false;
  Vec atil;
  bool ahat = false;
  bool fault_active = false;

  bool operator==(const TraceRecord&) const = default;
};

struct RunSummary {
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  std::int64_t pre_fault_steps = 0;   // after burn-in
  double far_pre_fault = 0.0;         // NaN when pre_fault_steps == 0
  double mean_z_pre_fault = 0.0;
  double var_z_pre_fault = 0.0;
  std::int64_t detection_window_steps = 0;
  double detection_rate = 0.0;        // alarm rate over [onset, onset + window]
  double alarm_rate_post_fault = 0.0; // over all steps from onset on
  double max_manifold_error = 0.0;    // |xtil - Pi3 xhat| / (1 + |Pi3 xhat|)
  double max_zeta_error = 0.0;        // |zeta - z| / (1 + z)
  double max_residual_error = 0.0;    // |rtil - Pi7 (Pi1 r + b1)| / (1 + |rtil|)
  double max_decode_error = 0.0;      // |raw decode - a|
  std::int64_t alarm_mismatches = 0;  // ahat != a outside the boundary band
  std::int64_t boundary_steps = 0;
  std::int64_t plain_alarms = 0;
};

enum class TransportMode { kLocal, kNetworked };

struct ExperimentConfig {
  SystemModel model = reactor_model();
  double a_star = kReactorAStar;
  std::optional<double> alpha_override;
  std::int64_t horizon = 500;
  std::uint64_t seed = 1;
  AnomalyProfile fault;
  KeyDims dims;
  KeygenOptions key_options;
  std::optional<KeySet> key;  // keygen(dims, seed) when absent
  NoiseMode noise = NoiseMode::kStochastic;
  std::int64_t burn_in = 100;
  std::int64_t detection_window = 200;
  bool record_trace = true;
  std::function<Vec(std::int64_t, Index)> input = reactor_input;
};

struct ExperimentResult {
  DetectorDesign design;
  KeySet key;
  EncodedConfig config;
  std::vector<TraceRecord> trace;
  RunSummary summary;
};

/// Runs the experiment with the remote station behind `transport`.
ExperimentResult run_experiment(const ExperimentConfig& config, wire::Transport& transport);

/// Same, through an in-process loopback transport.
ExperimentResult run_experiment_local(const ExperimentConfig& config);

ExperimentResult run_experiment_networked(const ExperimentConfig& config,
                                          const net::Address& remote);

/// Prepares design, key and encoded config without running any steps.
ExperimentResult prepare_experiment(const ExperimentConfig& config);

// CSV traces: one header row, comma separated, 17 significant digits.
std::string format_double(double v);
std::vector<std::string> trace_header(Index n_y, Index ny_tilde, Index n_u, Index nu_tilde,
                                      Index na_tilde);
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
std::vector<TraceRecord> read_trace_csv(std::istream& in);

struct ResidualStats {
  std::int64_t samples = 0;
  double mean_z = 0.0;
  double var_z = 0.0;
  double alarm_rate = 0.0;
  std::vector<double> lag1_autocorrelation;  // one per residual component
};

/// Anomaly-free plaintext run; statistics over the steps after burn_in.
ResidualStats residual_statistics(const SystemModel& model, const DetectorDesign& design,
                                  std::int64_t steps, std::uint64_t seed,
                                  std::int64_t burn_in = 100);

struct FarReport {
  double alpha = 0.0;
  std::vector<double> per_seed;
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo false alarm rate over `seeds` independent anomaly-free runs
/// of `steps` steps each (after burn-in); seeds run in parallel.
FarReport estimate_false_alarm_rate(const SystemModel& model, double a_star, std::int64_t steps,
                                    int seeds, std::uint64_t base_seed,
                                    std::optional<double> alpha_override = std::nullopt,
                                    std::int64_t burn_in = 100);

/// |corr(y_i, ytil_j)| over a trace, n_y x ny_tilde.
Mat output_encoding_correlation(const std::vector<TraceRecord>& trace);

struct CaseStudyResult {
  ExperimentResult run;
  DetectorDesign derived_design;    // Sigma_t = I, Sigma_w = 0.01 I
  DetectorDesign as_printed_design; // Sigma_t = Sigma_w = 0.001 I
};

/// The reactor scenario: fault 0.9 from k = 20, u_k broadcast to all inputs,
/// published encoded dimensions (8, 4, 4, 4, 2, 2).
ExperimentConfig casestudy_config(std::uint64_t seed, std::int64_t horizon = 200);
CaseStudyResult run_casestudy(std::uint64_t seed, std::int64_t horizon = 200);

}  // namespace iidetect
