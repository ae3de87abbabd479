#pragma once

#include <functional>
#include <vector>

#include "bohmscat/bohm.hpp"

namespace bohmscat {

struct PhaseShiftTable {
  double k = 0.0;
  int l_max = 0;
  std::vector<double> delta;
  double r_match = 0.0;
  double step = 0.0;
};

struct PhaseShiftOptions {
  // Negative: ceil(k * 5a) + 8.
  int l_max = -1;
  // Radial step; non-positive selects min(1/(100k), a/100).
  double step = 0.0;
  bool check_bound_states = true;
};

int auto_l_max(const PotentialModel& V, double k);

// Numerov integration of u'' = (2V + l(l+1)/r^2 - k^2) u, matched to
// kr j_l(kr), kr y_l(kr) at two radii where |V| < 1e-12.
PhaseShiftTable phase_shifts(const PotentialModel& V, double k, const PhaseShiftOptions& opts = {});

// Zero-energy s-wave node count; any node means a bound state exists.
bool has_bound_state(const PotentialModel& V);

// P_0..P_lmax at x by upward recurrence.
std::vector<double> legendre(int l_max, double x);

cplx partial_wave_amplitude(const PhaseShiftTable& table, double theta);

struct AmplitudeTable {
  double k = 0.0;
  std::vector<double> theta;
  std::vector<cplx> f;
  std::vector<double> sigma_diff;
  // |f| / (4 pi^2), so that 16 pi^4 |T|^2 equals sigma_diff.
  std::vector<double> t_abs;
};

AmplitudeTable amplitude(const PhaseShiftTable& table, const std::vector<double>& theta);

// |Im f(0) - (k/4pi) int |f|^2 dOmega| / |Im f(0)|, the integral by
// Gauss-Legendre quadrature of the amplitude.
double optical_theorem_residual(const PhaseShiftTable& table);

// First Born T-matrix (2 pi)^{-3} int exp(-i (k_out - k_in).x) V(x) d^3x.
cplx born_tmatrix(const PotentialModel& V, const Vec3& k_out, const Vec3& k_in);
// f_Born = -4 pi^2 T_1.
cplx born_amplitude(const PotentialModel& V, const Vec3& k_out, const Vec3& k_in);

// int over each bin of sigma_diff(theta) dOmega for an axisymmetric
// differential cross section.
std::vector<double> integrate_over_bins(const std::function<double(double)>& sigma_diff,
                                        const DetectorSpec& det);

enum class Oracle { partial_wave, born };

std::vector<double> sigma_diff_prediction(const PotentialModel& V, double k0,
                                          const DetectorSpec& det,
                                          Oracle oracle = Oracle::partial_wave);

}  // namespace bohmscat
