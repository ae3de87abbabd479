#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "bohmscat/error.hpp"
#include "bohmscat/experiment.hpp"
#include "bohmscat/report.hpp"

using namespace bohmscat;

namespace {

// Tiny grid, short window: exercises the whole pipeline in well under a second.
const char* kTiny = R"({
  "grid": {"n": 32, "extent": 32.0},
  "potential": {"kind": "gaussian_well", "v0": 0.5, "a": 1.0},
  "packet": {"sigma": 1.0, "k0": 1.0, "epsilon": 1.0},
  "beam": {"L_source": 7.0, "D_cut": "auto"},
  "detector": {"radii": [8.0, 10.0], "score_radius": 10.0},
  "sampling": {"M": 4, "trajectories": 30, "seed": 5},
  "evolution": {"dt": 0.05, "t_max": 2.0, "store_stride": 10, "check_times": [1.0],
                "leak_stop": 1e-2},
  "diagnostics": {"continuity_stride": 10, "path_dump": 2}
})";

ExperimentConfig tiny() { return parse_config(kTiny); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::invalid_argument;
}

std::string first_data_header(const std::string& csv) {
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# bohmscat config_hash=", 0), 0u);
  std::getline(is, line);
  return line;
}

}  // namespace

TEST(Config, ParsesAndDefaults) {
  const ExperimentConfig c = tiny();
  EXPECT_EQ(c.grid.n, 32);
  EXPECT_DOUBLE_EQ(c.d_cut(), 3.0 + 5.0);
  EXPECT_EQ(c.detector.bins.theta_step_deg, 20.0);
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Config, RejectsMalformedInput) {
  EXPECT_EQ(kind_of([] { parse_config("{"); }), ErrorKind::config_invalid);
  EXPECT_EQ(kind_of([] { parse_config(R"({"grid": {"n": 32, "size": 4}})"); }), ErrorKind::config_invalid);
  EXPECT_EQ(kind_of([] { parse_config(R"({"gird": {}})"); }), ErrorKind::config_invalid);
  EXPECT_EQ(kind_of([] { parse_config(R"({"grid": {"n": "32"}})"); }), ErrorKind::config_invalid);
  EXPECT_EQ(kind_of([] { parse_config(R"({"beam": {"D_cut": -1}})"); }), ErrorKind::config_invalid);
  EXPECT_EQ(kind_of([] { parse_config(R"({"beam": {"D_cut": "big"}})"); }), ErrorKind::config_invalid);
}

TEST(Config, ValidationNamesTheField) {
  auto rejects = [](const std::function<void(ExperimentConfig&)>& edit, const std::string& field) {
    ExperimentConfig c = tiny();
    edit(c);
    try {
      validate_config(c);
      ADD_FAILURE() << "accepted invalid " << field;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config_invalid);
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  rejects([](ExperimentConfig& c) { c.grid.n = 33; }, "grid");
  rejects([](ExperimentConfig& c) { c.potential.kind = "square"; }, "potential");
  rejects([](ExperimentConfig& c) { c.packet.epsilon = 0.0; }, "packet");
  rejects([](ExperimentConfig& c) { c.packet.k0 = 3.0; }, "packet");
  rejects([](ExperimentConfig& c) { c.beam.D_cut = 5.0; }, "beam");
  rejects([](ExperimentConfig& c) { c.beam.L_source = 13.0; }, "beam.L_source");
  rejects([](ExperimentConfig& c) { c.detector.radii = {13.5}; c.detector.score_radius = 13.5; }, "detector.radii");
  rejects([](ExperimentConfig& c) { c.detector.score_radius = 9.0; }, "detector.score_radius");
  rejects([](ExperimentConfig& c) { c.detector.bins.theta_lo_deg = 10.0; }, "detector");
  rejects([](ExperimentConfig& c) { c.sampling.M = 3; }, "sampling.M");
  rejects([](ExperimentConfig& c) { c.evolution.dt = 0.5; }, "evolution");
  rejects([](ExperimentConfig& c) { c.evolution.check_times = {3.0}; }, "evolution.check_times");
  rejects([](ExperimentConfig& c) { c.evolution.interpolation = "cubic"; }, "evolution.interpolation");
}

TEST(Config, HashTracksPhysicsNotOutputLocation) {
  ExperimentConfig a = tiny(), b = tiny();
  b.outputs.directory = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.sampling.seed = 6;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(hash_hex(0xabcULL), "0000000000000abc");
  // Canonical JSON parses back to the same config.
  EXPECT_EQ(config_hash(parse_config(canonical_json(a))), config_hash(a));
}

TEST(Experiment, DeterministicAcrossRunsAndWorkers) {
  const ExperimentConfig c = tiny();
  const ExperimentReport a = run_experiment(c, 1);
  const ExperimentReport b = run_experiment(c, 1);
  const ExperimentReport p = run_experiment(c, 3);
  EXPECT_EQ(sigma_csv(a), sigma_csv(b));
  EXPECT_EQ(report_json(a), report_json(b));
  EXPECT_EQ(sigma_csv(a), sigma_csv(p));
  EXPECT_EQ(report_json(a), report_json(p));
  ExperimentConfig other = c;
  other.sampling.seed = 6;
  EXPECT_NE(sigma_csv(run_experiment(other, 1)), sigma_csv(a));
}

TEST(Experiment, ReportContents) {
  const ExperimentReport r = run_experiment(tiny(), 1);
  EXPECT_EQ(r.nodes.size(), 4u);
  ASSERT_TRUE(r.y0.has_value());
  EXPECT_EQ(r.y0->cone.size(), r.rows[0].size());
  EXPECT_EQ(r.score_index(), 1u);
  for (const NodeResult& n : r.nodes) {
    EXPECT_EQ(n.trajectories, 30);
    EXPECT_EQ(n.exited + n.active_end + n.stalled + n.escaped, 30);
    EXPECT_EQ(n.equivariance.size(), 1u);
    EXPECT_EQ(n.radii.size(), 2u);
    EXPECT_NEAR(n.window_end, 2.0, 1e-12);
    EXPECT_LT(n.norm_drift, 1e-10);
    EXPECT_EQ(n.path_rows.size(), 2u * 5u);
  }
  EXPECT_EQ(first_data_header(sigma_csv(r)),
            "bin_id,theta_lo_deg,theta_hi_deg,phi_lo_deg,phi_hi_deg,sigma_emp,sigma_emp_se,sigma_pw,sigma_born,ratio_emp_pw");
  EXPECT_EQ(first_data_header(flux_csv(r.config, *r.y0, 1)),
            "bin_id,theta_lo,theta_hi,phi_lo,phi_hi,signed_flux,abs_flux,cone_integral,rel_diff");
  for (const BinRow& row : r.rows[1]) {
    EXPECT_GE(row.sigma_emp, 0.0);
    EXPECT_GT(row.sigma_emp_se, 0.0);
    EXPECT_GT(row.sigma_pw, 0.0);
  }
  // The profile read back from the JSON report equals the in-memory one.
  const DetectionProfile a = detection_profile(r);
  const DetectionProfile b = profile_from_report(report_json(r));
  for (double x : {0.0, 1.0, 4.0, 7.9}) EXPECT_DOUBLE_EQ(a(x), b(x));
}

TEST(Experiment, NullPotentialHasNoPrediction) {
  ExperimentConfig c = tiny();
  c.potential.kind = "zero";
  const ExperimentReport r = run_experiment(c, 1);
  for (const BinRow& row : r.rows[1]) {
    EXPECT_EQ(row.sigma_pw, 0.0);
    EXPECT_TRUE(std::isnan(row.ratio_emp_pw));
  }
  EXPECT_EQ(r.gates.bins_checked, 7);
}

TEST(Experiment, BoundStateAborts) {
  ExperimentConfig c = tiny();
  c.potential.v0 = -2.0;
  EXPECT_EQ(kind_of([&] { run_experiment(c, 1); }), ErrorKind::physics_precondition);
}

TEST(Experiment, InjectionOverlapAborts) {
  ExperimentConfig c = tiny();
  c.beam.L_source = 3.0;
  EXPECT_EQ(kind_of([&] { run_experiment(c, 1); }), ErrorKind::physics_precondition);
}

TEST(Experiment, GatesCompareAgainstOracle) {
  ExperimentReport r;
  r.config = tiny();
  BinRow good, bad, small;
  good.geometry.scored = bad.geometry.scored = small.geometry.scored = true;
  good.sigma_pw = 1.0; good.sigma_emp = 1.1; good.sigma_emp_se = 0.05; good.ratio_emp_pw = 1.1;
  bad.sigma_pw = 1.0; bad.sigma_emp = 1.3; bad.sigma_emp_se = 0.2; bad.ratio_emp_pw = 1.3;
  small.sigma_pw = 0.01; small.sigma_emp = 5.0; small.sigma_emp_se = 0.1; small.ratio_emp_pw = 500.0;
  r.rows = {{}, {good, small}};
  GateResult g = evaluate_gates(r);
  EXPECT_TRUE(g.passed);
  EXPECT_EQ(g.bins_checked, 1);
  r.rows = {{}, {good, bad}};
  g = evaluate_gates(r);
  EXPECT_FALSE(g.passed);
  EXPECT_EQ(g.failures.size(), 1u);
}

TEST(Scaling, SinglePointScheduleEqualsRun) {
  const ExperimentConfig c = tiny();
  const ExperimentReport r = run_experiment(c, 1);
  const ScalingTable t = scaling_study(c, {1.0}, {8.0, 10.0}, 1);
  std::size_t i = 0;
  for (std::size_t ri = 0; ri < 2; ++ri) {
    for (const BinRow& row : r.rows[ri]) {
      if (!row.geometry.scored) continue;
      ASSERT_LT(i, t.rows.size());
      EXPECT_EQ(t.rows[i].sigma_emp, row.sigma_emp);
      EXPECT_EQ(t.rows[i].radius, c.detector.radii[ri]);
      ++i;
    }
  }
  EXPECT_EQ(i, t.rows.size());
  EXPECT_EQ(t.monotone_fraction, 1.0);
}

TEST(Oracle, CsvTable) {
  const std::string csv = oracle_csv(tiny());
  EXPECT_EQ(first_data_header(csv), "theta_deg,re_f,im_f,sigma_diff");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 181);
}

TEST(Format, RoundTripsDoubles) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
  EXPECT_EQ(format_double(std::nan("")), "nan");
}
