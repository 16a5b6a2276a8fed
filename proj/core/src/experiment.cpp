#include "iidetect/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "iidetect/error.hpp"
#include "iidetect/target.hpp"

namespace iidetect {

namespace {

struct RunningMoments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

void append(std::vector<std::string>& cols, const char* prefix, Index n) {
  for (Index i = 1; i <= n; ++i) cols.push_back(std::string(prefix) + "_" + std::to_string(i));
}

Index count_prefix(const std::vector<std::string>& cols, const std::string& prefix) {
  return std::count_if(cols.begin(), cols.end(), [&](const std::string& c) {
    return c.size() > prefix.size() + 1 && c.compare(0, prefix.size() + 1, prefix + "_") == 0 &&
           std::all_of(c.begin() + static_cast<long>(prefix.size()) + 1, c.end(), ::isdigit);
  });
}

double parse_double(const std::string& cell) {
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end == cell.c_str() || *end != '\0') {
    throw Error(ErrorCode::kParseError, "bad numeric cell '" + cell + "'");
  }
  return v;
}

}  // namespace

bool in_boundary_band(double z, double alpha) {
  return std::abs(z - alpha) <= kBoundaryBand * std::max(1.0, alpha);
}

ExperimentResult prepare_experiment(const ExperimentConfig& config) {
  if (config.horizon < 1) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  ExperimentResult result;
  result.design = design_detector(config.model, config.a_star);
  if (config.alpha_override) result.design.alpha = *config.alpha_override;
  result.key = config.key ? *config.key
                          : keygen(config.dims, PlantDims::of(config.model), config.seed,
                                   config.key_options);
  result.config = build_encoded_config(result.key, config.model, result.design);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, wire::Transport& transport) {
  ExperimentResult result = prepare_experiment(config);
  const SystemModel& model = config.model;
  const KeySet& key = result.key;
  const double alpha = result.design.alpha;

  Plant plant(model, config.seed, config.noise);
  StandardDetector detector(model, result.design);
  TargetDetector shadow(result.config);  // local replica for harness diagnostics
  wire::ClientSession client(transport, key, result.config, config.seed);
  client.open();

  RunSummary& s = result.summary;
  s.burn_in = config.burn_in;
  RunningMoments z_pre;
  std::int64_t pre_alarms = 0;
  std::int64_t window_alarms = 0;
  std::int64_t post_steps = 0;
  std::int64_t post_alarms = 0;
  const bool has_fault = config.fault.kind == AnomalyProfile::Kind::kStep;

  if (config.record_trace) result.trace.reserve(static_cast<std::size_t>(config.horizon));
  for (std::int64_t k = 1; k <= config.horizon; ++k) {
    const Vec u = config.input(k, model.n_u());
    const Vec delta = config.fault.at(k, model.n_delta());

    const Vec on_manifold = key.pi3 * detector.xhat();
    s.max_manifold_error =
        std::max(s.max_manifold_error,
                 (shadow.state().xtil - on_manifold).norm() / (1.0 + on_manifold.norm()));

    const Vec y = plant.step(u, delta);
    const StepDiag plain = detector.step(u, y);
    const wire::ClientStep enc = client.step(u, y);
    const TargetDiag remote = shadow.step(enc.util, enc.ytil);

    const Vec expected_rtil = key.pi7 * (key.pi1 * plain.r + key.n1 * enc.s1);
    s.max_residual_error = std::max(
        s.max_residual_error, (remote.rtil - expected_rtil).norm() / (1.0 + remote.rtil.norm()));
    s.max_zeta_error =
        std::max(s.max_zeta_error, std::abs(remote.zeta - plain.z) / (1.0 + plain.z));
    s.max_decode_error = std::max(
        s.max_decode_error,
        std::abs(decode_alarm_raw(key, enc.atil, enc.ytil) - (plain.alarm ? 1.0 : 0.0)));
    if (in_boundary_band(plain.z, alpha)) {
      ++s.boundary_steps;
    } else if (enc.alarm != plain.alarm) {
      ++s.alarm_mismatches;
    }
    s.plain_alarms += plain.alarm;

    const bool fault_active = config.fault.active(k);
    if (!fault_active && k > config.burn_in) {
      z_pre.add(plain.z);
      pre_alarms += plain.alarm;
    }
    if (has_fault && fault_active) {
      ++post_steps;
      post_alarms += plain.alarm;
      if (k <= config.fault.onset + config.detection_window) {
        ++s.detection_window_steps;
        window_alarms += plain.alarm;
      }
    }

    if (config.record_trace) {
      result.trace.push_back({k, y, enc.ytil, u, enc.util, plain.z, remote.zeta, plain.alarm,
                              enc.atil, enc.alarm, fault_active});
    }
  }
  client.close();

  s.steps = config.horizon;
  s.pre_fault_steps = z_pre.n;
  s.far_pre_fault = z_pre.n > 0 ? static_cast<double>(pre_alarms) / static_cast<double>(z_pre.n)
                                : std::numeric_limits<double>::quiet_NaN();
  s.mean_z_pre_fault = z_pre.mean;
  s.var_z_pre_fault = z_pre.variance();
  s.detection_rate = s.detection_window_steps > 0
                         ? static_cast<double>(window_alarms) /
                               static_cast<double>(s.detection_window_steps)
                         : std::numeric_limits<double>::quiet_NaN();
  s.alarm_rate_post_fault = post_steps > 0 ? static_cast<double>(post_alarms) /
                                                 static_cast<double>(post_steps)
                                           : std::numeric_limits<double>::quiet_NaN();
  return result;
}

ExperimentResult run_experiment_local(const ExperimentConfig& config) {
  wire::LoopbackTransport loopback;
  return run_experiment(config, loopback);
}

ExperimentResult run_experiment_networked(const ExperimentConfig& config,
                                          const net::Address& remote) {
  net::TcpTransport tcp(remote);
  return run_experiment(config, tcp);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> trace_header(Index n_y, Index ny_tilde, Index n_u, Index nu_tilde,
                                      Index na_tilde) {
  std::vector<std::string> cols{"k"};
  append(cols, "y", n_y);
  append(cols, "ytil", ny_tilde);
  append(cols, "u", n_u);
  append(cols, "util", nu_tilde);
  cols.insert(cols.end(), {"z", "zeta", "a"});
  append(cols, "atil", na_tilde);
  cols.insert(cols.end(), {"ahat", "fault_active"});
  return cols;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  if (trace.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot infer CSV layout from an empty trace");
  }
  const TraceRecord& first = trace.front();
  const auto header = trace_header(first.y.size(), first.ytil.size(), first.u.size(),
                                   first.util.size(), first.atil.size());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  const auto put_vec = [&out](const Vec& v) {
    for (Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
  };
  for (const TraceRecord& r : trace) {
    out << r.k;
    put_vec(r.y);
    put_vec(r.ytil);
    put_vec(r.u);
    put_vec(r.util);
    out << ',' << format_double(r.z) << ',' << format_double(r.zeta) << ',' << int{r.a};
    put_vec(r.atil);
    out << ',' << int{r.ahat} << ',' << int{r.fault_active} << '\n';
  }
}

std::vector<TraceRecord> read_trace_csv(std::istream& in) {
  const auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, "empty CSV");
  const auto header = split(line);
  const Index n_y = count_prefix(header, "y");
  const Index ny_t = count_prefix(header, "ytil");
  const Index n_u = count_prefix(header, "u");
  const Index nu_t = count_prefix(header, "util");
  const Index na_t = count_prefix(header, "atil");
  if (header != trace_header(n_y, ny_t, n_u, nu_t, na_t)) {
    throw Error(ErrorCode::kParseError, "CSV header does not match the trace schema");
  }

  std::vector<TraceRecord> trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kParseError, "CSV row has " + std::to_string(cells.size()) +
                                              " cells, expected " + std::to_string(header.size()));
    }
    std::size_t at = 0;
    const auto next = [&] { return parse_double(cells[at++]); };
    const auto take_vec = [&](Index n) {
      Vec v(n);
      for (Index i = 0; i < n; ++i) v(i) = next();
      return v;
    };
    TraceRecord r;
    r.k = static_cast<std::int64_t>(next());
    r.y = take_vec(n_y);
    r.ytil = take_vec(ny_t);
    r.u = take_vec(n_u);
    r.util = take_vec(nu_t);
    r.z = next();
    r.zeta = next();
    r.a = next() != 0.0;
    r.atil = take_vec(na_t);
    r.ahat = next() != 0.0;
    r.fault_active = next() != 0.0;
    trace.push_back(std::move(r));
  }
  return trace;
}

ResidualStats residual_statistics(const SystemModel& model, const DetectorDesign& design,
                                  std::int64_t steps, std::uint64_t seed, std::int64_t burn_in) {
  Plant plant(model, seed);
  StandardDetector detector(model, design);
  const Vec no_fault = Vec::Zero(model.n_delta());
  const Index ny = model.n_y();

  RunningMoments z;
  std::int64_t alarms = 0;
  std::vector<RunningMoments> r_moments(static_cast<std::size_t>(ny));
  Vec lag_sum = Vec::Zero(ny);
  std::vector<Vec> residuals;
  residuals.reserve(static_cast<std::size_t>(steps));
  for (std::int64_t k = 1; k <= burn_in + steps; ++k) {
    const Vec y = plant.step(reactor_input(k, model.n_u()), no_fault);
    const StepDiag d = detector.step(reactor_input(k, model.n_u()), y);
    if (k <= burn_in) continue;
    z.add(d.z);
    alarms += d.alarm;
    residuals.push_back(d.r);
  }

  ResidualStats out;
  out.samples = z.n;
  out.mean_z = z.mean;
  out.var_z = z.variance();
  out.alarm_rate = z.n ? static_cast<double>(alarms) / static_cast<double>(z.n) : 0.0;
  for (Index i = 0; i < ny; ++i) {
    double mean = 0.0;
    for (const Vec& r : residuals) mean += r(i);
    mean /= static_cast<double>(residuals.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t t = 0; t < residuals.size(); ++t) {
      const double c = residuals[t](i) - mean;
      den += c * c;
      if (t + 1 < residuals.size()) num += c * (residuals[t + 1](i) - mean);
    }
    out.lag1_autocorrelation.push_back(den > 0.0 ? num / den : 0.0);
  }
  return out;
}

FarReport estimate_false_alarm_rate(const SystemModel& model, double a_star, std::int64_t steps,
                                    int seeds, std::uint64_t base_seed,
                                    std::optional<double> alpha_override, std::int64_t burn_in) {
  if (seeds < 1 || steps < 1) {
    throw Error(ErrorCode::kInvalidArgument, "need at least one seed and one step");
  }
  DetectorDesign design = design_detector(model, a_star);
  if (alpha_override) design.alpha = *alpha_override;

  std::vector<std::future<double>> jobs;
  for (int i = 0; i < seeds; ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      return residual_statistics(model, design, steps, base_seed + static_cast<std::uint64_t>(i),
                                 burn_in)
          .alarm_rate;
    }));
  }
  FarReport report;
  report.alpha = design.alpha;
  RunningMoments m;
  for (auto& job : jobs) {
    report.per_seed.push_back(job.get());
    m.add(report.per_seed.back());
  }
  report.mean = m.mean;
  report.stderr_ = std::sqrt(m.variance() / static_cast<double>(m.n));
  return report;
}

Mat output_encoding_correlation(const std::vector<TraceRecord>& trace) {
  if (trace.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two records");
  const Index ny = trace.front().y.size();
  const Index nyt = trace.front().ytil.size();
  const auto n = static_cast<double>(trace.size());
  Vec mean_y = Vec::Zero(ny);
  Vec mean_yt = Vec::Zero(nyt);
  for (const TraceRecord& r : trace) {
    mean_y += r.y;
    mean_yt += r.ytil;
  }
  mean_y /= n;
  mean_yt /= n;
  Mat cross = Mat::Zero(ny, nyt);
  Vec var_y = Vec::Zero(ny);
  Vec var_yt = Vec::Zero(nyt);
  for (const TraceRecord& r : trace) {
    const Vec dy = r.y - mean_y;
    const Vec dyt = r.ytil - mean_yt;
    cross += dy * dyt.transpose();
    var_y += dy.cwiseAbs2();
    var_yt += dyt.cwiseAbs2();
  }
  Mat corr(ny, nyt);
  for (Index i = 0; i < ny; ++i) {
    for (Index j = 0; j < nyt; ++j) {
      corr(i, j) = std::abs(cross(i, j)) / std::sqrt(var_y(i) * var_yt(j));
    }
  }
  return corr;
}

ExperimentConfig casestudy_config(std::uint64_t seed, std::int64_t horizon) {
  ExperimentConfig cfg;
  cfg.model = reactor_model(ReactorNoise::kDerived);
  cfg.a_star = kReactorAStar;
  cfg.horizon = horizon;
  cfg.seed = seed;
  cfg.fault = AnomalyProfile::step(kReactorFaultOnset, Vec::Constant(1, kReactorFaultValue));
  cfg.dims = KeyDims{8, 4, 4, 4, 2, 2};
  cfg.burn_in = 0;
  return cfg;
}

CaseStudyResult run_casestudy(std::uint64_t seed, std::int64_t horizon) {
  CaseStudyResult out;
  out.run = run_experiment_local(casestudy_config(seed, horizon));
  out.derived_design = out.run.design;
  out.as_printed_design = design_detector(reactor_model(ReactorNoise::kAsPrinted), kReactorAStar);
  return out;
}

}  // namespace iidetect
