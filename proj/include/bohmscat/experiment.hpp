#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bohmscat/config.hpp"
#include "bohmscat/flux.hpp"
#include "bohmscat/stationary.hpp"

namespace bohmscat {

inline constexpr const char* kVersion = "bohmscat 0.1.0";

struct NodeJob {
  int index = 0;
  // Impact parameter |y_p|; the packet sits at azimuth 0.
  double r = 0.0;
  double weight = 0.0;
  // Keep the out-asymptote cone integrals at window end.
  bool with_cone = false;
  // Positive: overrides sampling.trajectories.
  int trajectories = 0;
};

struct RadiusResult {
  double radius = 0.0;
  CrossingTally tally;
  FluxLedger flux;
  // Probability inside this sphere when the window closed.
  double inside_end = 0.0;
};

struct TimedEquivariance {
  double t = 0.0;
  EquivarianceResult result;
  // Trajectories already frozen or lost at t; they spoil the comparison.
  long not_active = 0;
};

struct NodeResult {
  NodeJob job;
  Vec3 y;
  std::vector<RadiusResult> radii;
  long trajectories = 0;
  long stalled = 0;
  long escaped = 0;
  long exited = 0;
  long active_end = 0;
  int max_subdivision = 0;
  double continuity_max = 0.0;
  double peak_density0 = 0.0;
  double leakage_max = 0.0;
  double norm_drift = 0.0;
  double window_end = 0.0;
  std::string window_reason;
  std::vector<TimedEquivariance> equivariance;
  std::vector<double> cone;
  std::vector<PathPoint> path_rows;
  std::vector<int> path_ids;
};

// One field evolution from the source plane with its trajectory ensemble,
// crossing trackers and flux accumulators for every detector radius.
NodeResult run_node(const ExperimentConfig& cfg, const NodeJob& job);

struct BinRow {
  int bin = 0;
  DetectorBin geometry;
  double sigma_emp = 0.0;
  double sigma_emp_se = 0.0;
  double sigma_pw = 0.0;
  double sigma_born = 0.0;
  double ratio_emp_pw = 0.0;
};

struct GateResult {
  bool passed = true;
  int bins_checked = 0;
  std::vector<std::string> failures;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string config_hash;
  std::string version = kVersion;
  std::vector<ImpactNode> quadrature;
  std::vector<NodeResult> nodes;
  std::optional<NodeResult> y0;
  PhaseShiftTable phase_shifts;
  double optical_residual = 0.0;
  // rows[i] is the table at detector.radii[i]
  std::vector<std::vector<BinRow>> rows;
  std::vector<SigmaEstimate> sigma;
  std::vector<double> sigma_pw;
  std::vector<double> sigma_born;
  GateResult gates;

  std::size_t score_index() const;
};

// Checks the config, scans for bound states, then runs every quadrature node
// (plus the y = 0 node) on `workers` threads and merges results in node order.
ExperimentReport run_experiment(const ExperimentConfig& cfg, int workers = 1);

GateResult evaluate_gates(const ExperimentReport& report);

struct ScalingRow {
  double epsilon = 0.0;
  double radius = 0.0;
  int bin = 0;
  double sigma_emp = 0.0;
  double sigma_emp_se = 0.0;
  double sigma_pw = 0.0;
  // |sigma_emp - sigma_pw| / sigma_pw
  double distance = 0.0;
  double n_minus = 0.0;
};

struct ScalingTable {
  std::vector<ScalingRow> rows;
  // Fraction of scored bins whose distance at the largest radius does not
  // increase along the epsilon schedule.
  double monotone_fraction = 0.0;
  // n_minus (y = 0 node) non-increasing in R at every epsilon.
  bool gap_decreasing = true;
};

// Outer loop epsilon, inner loop R: the R limit is taken before epsilon.
ScalingTable scaling_study(const ExperimentConfig& base, const std::vector<double>& epsilon_schedule,
                           const std::vector<double>& R_schedule, int workers = 1);

// Detection profile P(|y_p|) summed over scored bins at the score radius.
DetectionProfile detection_profile(const ExperimentReport& report);

}  // namespace bohmscat
