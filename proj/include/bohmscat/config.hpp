#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bohmscat/beam.hpp"
#include "bohmscat/bohm.hpp"

namespace bohmscat {

struct ExperimentConfig {
  struct Grid {
    int n = 64;
    double extent = 40.0;
  } grid;

  struct Potential {
    std::string kind = "gaussian_well";
    double v0 = 0.5;
    double a = 1.0;
  } potential;

  struct Packet {
    double sigma = 1.0;
    // Magnitude of the boost along +e3.
    double k0 = 2.0;
    double epsilon = 1.0;
  } packet;

  struct Beam {
    double L_source = 9.0;
    // Non-positive selects 3 sigma/eps + 5a.
    double D_cut = 0.0;
    double tau = 1000.0;
  } beam;

  struct Detector {
    std::vector<double> radii{15.0};
    double score_radius = 15.0;
    BinLayout bins;
    // Trajectories are frozen this far beyond the largest radius.
    double freeze_margin = 1.0;
  } detector;

  struct Sampling {
    int M = 12;
    int trajectories = 2000;
    std::uint64_t seed = 1;
  } sampling;

  struct Evolution {
    double dt = 0.025;
    double t_max = 20.0;
    int store_stride = 40;
    std::vector<double> check_times;
    // The window closes once less than this much probability is inside the
    // largest sphere.
    double inside_stop = 1e-4;
    // The window closes once the boundary shell holds more than this.
    double leak_stop = 1e-8;
    std::string interpolation = "phase_trilinear";
    double c_step = 0.5;
  } evolution;

  struct Diagnostics {
    // Extra field at y = 0 for the flux, FAST and crossing-bridge checks.
    bool y0_node = true;
    int continuity_stride = 40;
    // Trajectory path CSV rows per node (0 = off).
    int path_dump = 0;
  } diagnostics;

  struct Outputs {
    std::string directory = "out";
  } outputs;

  struct Gates {
    double ratio_tol = 0.15;
    double se_multiple = 3.0;
    double min_fraction = 0.05;
  } gates;

  struct Scaling {
    std::vector<double> epsilon;
    std::vector<double> radii;
  } scaling;

  struct Lln {
    std::vector<double> tau{100.0, 1000.0, 10000.0};
    int repeats = 50;
  } lln;

  GridSpec grid_spec() const;
  PotentialModel potential_model() const;
  double d_cut() const;
  BeamConfig beam_config() const;
  DetectorSpec detector_at(double radius) const;
  Interpolation interpolation() const;
  int shell_width() const;
};

// Throws Error(config_invalid) with the offending key on malformed input,
// unknown keys, or wrong types.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Every precondition that can be checked before compute; throws
// Error(config_invalid) naming the field.
void validate_config(const ExperimentConfig& cfg);

// Sorted-key JSON of every field, the basis of the config hash.
std::string canonical_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);

}  // namespace bohmscat
