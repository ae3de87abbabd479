#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "bohmscat/fields.hpp"

namespace bohmscat {

struct BeamConfig {
  Vec3 k0{0.0, 0.0, 2.0};
  double sigma = 1.0;
  double epsilon = 1.0;
  // Source plane sits at y3 = -L_source.
  double L_source = 0.0;
  double D_cut = 0.0;
  double tau = 0.0;
  std::uint64_t rng_seed = 0;
};

// 3 sigma/eps + 5a: the smallest profile radius the beam accepts.
double minimum_d_cut(double sigma, double epsilon, double a);
void validate_beam(const BeamConfig& cfg, double potential_range_a);

struct EmissionEvent {
  double t_emit = 0.0;
  Vec3 y;
  Vec3 q;
};

PacketSpec packet_at(const BeamConfig& cfg, const Vec3& y);

// Exact |psi|^2 sample: per-axis normal with std sigma/(sqrt(2) eps) about the center.
Vec3 sample_initial_position(const PacketSpec& spec, std::mt19937_64& rng);

// Poisson(pi D_cut^2 tau) emissions: uniform times, uniform disc positions,
// exact |psi_y|^2 positions.
std::vector<EmissionEvent> sample_emissions(const BeamConfig& cfg, std::mt19937_64& rng);
std::vector<EmissionEvent> sample_emissions(const BeamConfig& cfg);

void write_emissions_csv(std::ostream& os, const std::vector<EmissionEvent>& events);

struct ImpactNode {
  double r = 0.0;
  double weight = 0.0;
};

// Gauss-Legendre in r on [0, D_cut], w_j = 2 pi r_j (GL weight).
std::vector<ImpactNode> impact_quadrature(const BeamConfig& cfg, int M);

struct NodeDetection {
  double r = 0.0;
  double weight = 0.0;
  std::vector<double> p;
  std::vector<double> se;
};

struct SigmaEstimate {
  std::vector<double> sigma;
  std::vector<double> se;
  // Weighted contribution of the outermost node, a truncation estimate.
  std::vector<double> outer_node;
};

SigmaEstimate estimate_sigma(const std::vector<NodeDetection>& nodes);

// Detection probability as a function of |y_p|, piecewise linear through the
// nodes and flat beyond them.
class DetectionProfile {
 public:
  DetectionProfile(std::vector<double> r, std::vector<double> p, double d_cut);

  double operator()(double r) const;
  // int_disc P(|y|) d^2y, exact for the interpolant.
  double integral() const;

 private:
  std::vector<double> r_, p_;
  double d_cut_;
};

struct LlnRow {
  double tau = 0.0;
  double mean_rate = 0.0;
  double rms_deviation = 0.0;
  double mean_count = 0.0;
  double count_se = 0.0;
};

struct LlnTable {
  double gamma_hat = 0.0;
  std::vector<LlnRow> rows;
  // Slope of log(rms deviation) against log(tau).
  double fitted_exponent = 0.0;
};

// Literal counting process N*(tau): Poisson emissions, Bernoulli detection
// with P(|y_p|), repeated `repeats` times per tau.
LlnTable lln_run(const BeamConfig& cfg, const DetectionProfile& profile,
                 const std::vector<double>& tau_schedule, int repeats);

}  // namespace bohmscat
