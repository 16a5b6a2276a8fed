#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "iidetect/error.hpp"
#include "iidetect/experiment.hpp"

using namespace iidetect;

TEST(Csv, HeaderMatchesSchema) {
  const auto h = trace_header(3, 4, 3, 4, 2);
  const std::vector<std::string> expected{
      "k",      "y_1",    "y_2",    "y_3",    "ytil_1", "ytil_2", "ytil_3", "ytil_4",
      "u_1",    "u_2",    "u_3",    "util_1", "util_2", "util_3", "util_4", "z",
      "zeta",   "a",      "atil_1", "atil_2", "ahat",   "fault_active"};
  EXPECT_EQ(h, expected);
}

TEST(Csv, RoundTripIsExact) {
  const auto r = run_experiment_local(casestudy_config(2, 300));
  std::stringstream ss;
  write_trace_csv(ss, r.trace);
  const std::string text = ss.str();
  const auto first_line = text.substr(0, text.find('\n'));
  EXPECT_EQ(std::count(first_line.begin(), first_line.end(), ',') + 1, 22);
  std::istringstream in(text);
  EXPECT_TRUE(read_trace_csv(in) == r.trace);
}

TEST(Csv, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
}

TEST(Csv, RejectsMalformed) {
  std::istringstream empty("");
  EXPECT_THROW(read_trace_csv(empty), Error);
  std::istringstream bad_header("k,y_1,bogus\n");
  EXPECT_THROW(read_trace_csv(bad_header), Error);
  std::ostringstream ok;
  write_trace_csv(ok, run_experiment_local(casestudy_config(1, 2)).trace);
  std::istringstream short_row(ok.str() + "3,1,2\n");
  EXPECT_THROW(read_trace_csv(short_row), Error);
  std::string text = ok.str();
  text.replace(text.rfind(",0,"), 3, ",x,");
  std::istringstream bad_cell(text);
  EXPECT_THROW(read_trace_csv(bad_cell), Error);
}

TEST(Experiment, ZeroNoiseNoFault) {
  ExperimentConfig cfg;
  cfg.noise = NoiseMode::kDeterministic;
  cfg.horizon = 300;
  const auto r = run_experiment_local(cfg);
  for (const auto& rec : r.trace) {
    EXPECT_EQ(rec.z, 0.0) << rec.k;
    EXPECT_FALSE(rec.a);
    EXPECT_FALSE(rec.ahat);
  }
  EXPECT_EQ(r.summary.plain_alarms, 0);
  EXPECT_EQ(r.summary.far_pre_fault, 0.0);
}

TEST(Experiment, SummaryBookkeeping) {
  ExperimentConfig cfg = casestudy_config(5, 500);
  cfg.burn_in = 5;
  const auto r = run_experiment_local(cfg);
  const auto& s = r.summary;
  EXPECT_EQ(s.steps, 500);
  EXPECT_EQ(s.pre_fault_steps, 14);  // k = 6..19
  EXPECT_EQ(s.detection_window_steps, 201);
  EXPECT_EQ(s.alarm_mismatches, 0);
  EXPECT_LE(s.max_zeta_error, 1e-8);
  EXPECT_LE(s.max_manifold_error, 1e-6);
  EXPECT_LE(s.max_residual_error, 1e-8);
  EXPECT_LE(s.max_decode_error, kDecodeTol);
  std::int64_t alarms = 0;
  for (const auto& rec : r.trace) {
    alarms += rec.a;
    EXPECT_EQ(rec.fault_active, rec.k >= 20);
  }
  EXPECT_EQ(alarms, s.plain_alarms);
}

TEST(Experiment, NoFaultLeavesPostFaultUndefined) {
  ExperimentConfig cfg;
  cfg.horizon = 200;
  const auto r = run_experiment_local(cfg);
  EXPECT_TRUE(std::isnan(r.summary.detection_rate));
  EXPECT_EQ(r.summary.pre_fault_steps, 100);
}

TEST(Experiment, AlphaOverride) {
  ExperimentConfig cfg = casestudy_config(1, 50);
  cfg.alpha_override = 0.0;
  const auto r = run_experiment_local(cfg);
  EXPECT_EQ(r.config.alpha, 0.0);
  for (const auto& rec : r.trace) EXPECT_TRUE(rec.ahat);
}

TEST(Experiment, SeedsReproduce) {
  const auto a = run_experiment_local(casestudy_config(9, 200));
  const auto b = run_experiment_local(casestudy_config(9, 200));
  const auto c = run_experiment_local(casestudy_config(10, 200));
  EXPECT_TRUE(a.trace == b.trace);
  EXPECT_FALSE(a.trace == c.trace);
}

TEST(Experiment, RejectsEmptyHorizon) {
  ExperimentConfig cfg;
  cfg.horizon = 0;
  EXPECT_THROW(run_experiment_local(cfg), Error);
}

TEST(Correlation, DetectsLinearDependence) {
  std::vector<TraceRecord> trace;
  RandomStream rng(1);
  for (int k = 0; k < 2000; ++k) {
    TraceRecord r;
    r.y = rng.normal_vector(2);
    r.ytil = Vec(3);
    r.ytil << 2 * r.y(0), rng.normal(), -r.y(1) + 0.01 * rng.normal();
    trace.push_back(r);
  }
  const Mat c = output_encoding_correlation(trace);
  EXPECT_NEAR(c(0, 0), 1.0, 1e-12);
  EXPECT_GT(c(1, 2), 0.99);
  EXPECT_LT(c(0, 1), 0.1);
}

TEST(CaseStudy, Dimensions) {
  const auto cs = run_casestudy(1, 100);
  EXPECT_EQ(cs.run.trace.front().y.size(), 3);
  EXPECT_EQ(cs.run.trace.front().ytil.size(), 4);
  EXPECT_EQ(cs.run.trace.front().atil.size(), 2);
  EXPECT_NEAR(cs.derived_design.sigma(0, 0), 1.0169, 2e-3);
  EXPECT_NEAR(cs.as_printed_design.alpha, cs.derived_design.alpha, 1e-15);
  EXPECT_LT(cs.as_printed_design.sigma(0, 0), 0.01);
}
