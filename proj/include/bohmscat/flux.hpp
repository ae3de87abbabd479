#pragma once

#include <array>
#include <vector>

#include "bohmscat/bohm.hpp"

namespace bohmscat {

using CurrentField = std::array<rvec, 3>;

// j = Im(conj(psi) grad psi) at lattice sites.
CurrentField current_density(const Snapshot& snap);
// Same with the gradient taken spectrally from the field itself.
CurrentField current_density(const ComplexField& field);

// Max over sites of |(rho_next - rho_prev)/dt + (div j_prev + div j_next)/2|
// with div j = Im(conj(psi) lap psi) evaluated spectrally.
double continuity_residual(const ComplexField& prev, const ComplexField& next, double dt);
double continuity_residual(const cvec& prev, const cvec& next, double dt, Propagator& prop);

// Probability inside the open ball |x| < R.
double probability_inside(const cvec& psi, const GridSpec& grid, double R);

struct SphereNode {
  Vec3 x;
  Vec3 normal;
  double weight = 0.0;
  int bin = -1;
};

// Per bin: Gauss-Legendre in cos(theta) times uniform azimuthal midpoints,
// with node spacing near `spacing` on the sphere of radius det.radius.
std::vector<SphereNode> sphere_quadrature(const DetectorSpec& det, double spacing);

struct FluxLedger {
  double radius = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<double> signed_flux;
  std::vector<double> absolute_flux;
  // |trapezoid - Simpson| + |fine nodes - coarse nodes| + |tricubic - trilinear|
  std::vector<double> error;
  bool truncated = false;

  double signed_total() const;
};

// Streaming time integral of j.n over the sphere, fed one snapshot at a time
// at uniform time spacing.
class FluxAccumulator {
 public:
  FluxAccumulator(const DetectorSpec& det, const GridSpec& grid);

  void add(double t, const CurrentField& j);
  void add(double t, const Snapshot& snap) { add(t, current_density(snap)); }
  FluxLedger ledger() const;
  const DetectorSpec& detector() const { return det_; }
  std::size_t samples() const { return times_.size(); }

 private:
  // j is interpolated to the nodes tricubically, or trilinearly for the error term.
  void rates(const CurrentField& j, const std::vector<SphereNode>& nodes, bool cubic, std::vector<double>& sgn,
             std::vector<double>* abs) const;

  DetectorSpec det_;
  GridSpec grid_;
  std::vector<SphereNode> fine_, coarse_;
  std::vector<double> times_;
  std::vector<std::vector<double>> signed_rate_, abs_rate_, coarse_rate_, linear_rate_;
};

// Probability of |psi_hat|^2 in the cone over each bin. |psi_hat|^2 is taken
// constant over each lattice cell; cells cut by a cone boundary are split.
std::vector<double> cone_integrals(const ComplexField& psi_hat, const DetectorSpec& det);

struct FastBinReport {
  int bin = 0;
  bool scored = false;
  double signed_flux = 0.0;
  double absolute_flux = 0.0;
  double flux_error = 0.0;
  double cone_integral = 0.0;
  double rel_diff = 0.0;
  // (absolute - signed) / absolute
  double outwardness = 0.0;
};

std::vector<FastBinReport> fast_check(const FluxLedger& ledger, const ComplexField& psi_out_hat,
                                      const DetectorSpec& det);
// Same with precomputed cone integrals.
std::vector<FastBinReport> fast_check(const FluxLedger& ledger, const std::vector<double>& cone,
                                      const DetectorSpec& det);

}  // namespace bohmscat
