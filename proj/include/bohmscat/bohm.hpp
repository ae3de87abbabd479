#pragma once

#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "bohmscat/propagator.hpp"

namespace bohmscat {

// How psi and grad psi are carried from lattice sites to an arbitrary point.
//  trilinear        plain trilinear weights on psi and each grad component.
//  phase_trilinear  trilinear on the field demodulated by the local carrier
//                   exp(i kappa.x), kappa the local Bohmian velocity; removes
//                   the O(k^2 dx^2) bias plain trilinear has on a boosted packet.
//  spectral         exact trigonometric interpolant of the lattice data,
//                   O(n^3) per point; needs Snapshot::spectrum.
enum class Interpolation { trilinear, phase_trilinear, spectral };

struct LocalField {
  cplx psi;
  std::array<cplx, 3> grad;
};

// Fills snap.spectrum (DFT of psi / n^3) when the spectral mode needs it.
void prepare_spectrum(Snapshot& snap, const Fft3& fft);

LocalField sample_field(const Snapshot& snap, const GridSpec& grid, const Vec3& x,
                        Interpolation mode);

struct VelocitySample {
  Vec3 v;
  double density = 0.0;
  bool stalled = false;
};

inline Vec3 velocity_from(const LocalField& f) {
  const double rho = std::norm(f.psi);
  // Im(conj(psi) grad psi) / |psi|^2
  return {(std::conj(f.psi) * f.grad[0]).imag() / rho, (std::conj(f.psi) * f.grad[1]).imag() / rho,
          (std::conj(f.psi) * f.grad[2]).imag() / rho};
}

VelocitySample velocity_field(const Snapshot& snap, const GridSpec& grid, const Vec3& x,
                              Interpolation mode, double node_floor = 1e-14);

// Snapshot of a bare field: spectral gradient, peak density.
Snapshot make_snapshot(const ComplexField& field);

// v = Im(grad psi / psi) with spectral gradient and trilinear interpolation;
// empty when |psi(x)|^2 < 1e-14 * peak.
std::optional<Vec3> velocity_field(const ComplexField& field, const Vec3& x);

struct DetectorBin {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  double phi_lo = 0.0;
  double phi_hi = 0.0;
  bool scored = false;

  double solid_angle() const;
};

struct BinLayout {
  double theta_lo_deg = 20.0;
  double theta_hi_deg = 160.0;
  double theta_step_deg = 20.0;
  int n_phi = 1;
  double theta_min_deg = 15.0;
};

// Angles in radians. The bins tile S^2: a forward cap [0, theta_lo], scored
// rings on [theta_lo, theta_hi] split into n_phi azimuthal cells, and a
// backward cap [theta_hi, pi]. Caps are reported but never scored.
struct DetectorSpec {
  double radius = 0.0;
  std::vector<DetectorBin> bins;
  double theta_min = 0.0;

  int bin_of(const Vec3& direction) const;
  std::size_t size() const { return bins.size(); }
  void validate() const;
};

DetectorSpec make_detector(double radius, const BinLayout& layout);

enum class TrajectoryStatus { active, exited, stalled, escaped_grid };

struct PathPoint {
  double t = 0.0;
  Vec3 x;
  Vec3 v;
};

struct Trajectory {
  Vec3 q0;
  PathPoint cur;
  bool has_velocity = false;
  TrajectoryStatus status = TrajectoryStatus::active;
  std::vector<PathPoint> path;
  int max_subdivision = 0;
};

Trajectory make_trajectory(const Vec3& q0, double t0, bool record_path = false);

struct TrajectoryOptions {
  Interpolation mode = Interpolation::phase_trilinear;
  double c_step = 0.5;
  int max_halvings = 6;
  double node_floor = 1e-14;
  // Max-norm margin kept from the box faces; escaped_grid beyond it.
  double guard = 0.0;
  // Trajectories beyond this radius are frozen as exited.
  double freeze_radius = std::numeric_limits<double>::infinity();
  bool record_path = false;
  int record_stride = 1;
};

// Called after every accepted step with the segment just integrated.
struct SegmentSink {
  virtual ~SegmentSink() = default;
  virtual void segment(std::size_t index, const PathPoint& a, const PathPoint& b) = 0;
};

// RK4 across [t, t+dt] using snapshots at t, t+dt/2, t+dt. Steps whose
// displacement exceeds c_step*dx are redone in 2^s substeps with the local
// field interpolated quadratically in time between the snapshots.
void advance_trajectories(const Snapshot& s0, const Snapshot& s_half, const Snapshot& s1,
                          const GridSpec& grid, std::vector<Trajectory>& trajectories,
                          const TrajectoryOptions& opts, SegmentSink* sink = nullptr,
                          long step_index = 0);

struct CrossingRecord {
  double t_exit = std::numeric_limits<double>::infinity();
  std::optional<Vec3> exit_direction;
  int n_plus = 0;
  int n_minus = 0;
  int grazing = 0;
  bool started_inside = false;
  std::vector<int> plus_by_bin;
  std::vector<int> minus_by_bin;

  int n_sig() const { return n_plus - n_minus; }
  int n_tot() const { return n_plus + n_minus; }
};

// Bin of the detection event, -1 when not detected.
int detection_bin(const CrossingRecord& rec, const DetectorSpec& det);

// Streaming first-exit and crossing bookkeeping for one sphere. Segments are
// resolved with cubic Hermite dense output refined near the sphere.
class CrossingTracker {
 public:
  explicit CrossingTracker(const DetectorSpec* det = nullptr);

  void start(const PathPoint& p0);
  void feed(const PathPoint& a, const PathPoint& b);
  const CrossingRecord& record() const { return rec_; }

  static constexpr int refine_points = 64;
  static constexpr double grazing_speed = 1e-12;

 private:
  void crossing(double t, const Vec3& x, const Vec3& v, bool outward);

  const DetectorSpec* det_;
  CrossingRecord rec_;
};

CrossingRecord detect_crossings(const Trajectory& trajectory, const DetectorSpec& det);

// Mergeable sums over an ensemble of records for one detector.
struct CrossingTally {
  std::size_t count = 0;
  std::vector<double> nsig_sum, nsig_sq;
  std::vector<double> ntot_sum;
  std::vector<double> ndet_sum;
  double full_nsig_sum = 0.0, full_nsig_sq = 0.0;
  double full_nminus_sum = 0.0, full_nminus_sq = 0.0;
  double full_ndet_sum = 0.0;
  long grazing = 0;
  long undetected_active = 0;

  explicit CrossingTally(std::size_t bins = 0);
  void add(const CrossingRecord& rec, const DetectorSpec& det, bool still_active = false);
  void merge(const CrossingTally& other);
};

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
};

struct CrossingSummary {
  std::size_t count = 0;
  std::vector<MeanSE> n_sig;
  std::vector<MeanSE> n_tot;
  std::vector<MeanSE> n_det;
  MeanSE full_n_sig;
  MeanSE full_n_minus;
  MeanSE full_n_det;
  long grazing = 0;
};

CrossingSummary summarize(const CrossingTally& tally);
CrossingSummary crossing_expectations(const std::vector<CrossingRecord>& records,
                                      const DetectorSpec& det);

struct EquivarianceResult {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 0.0;
  double min_expected = 0.0;
};

// Chi-square of particle positions against |psi|^2 on cells^3 boxes spanning
// center +- 2 std per axis (at least one lattice spacing per cell; edges
// snapped to half-lattice positions), plus one overflow cell for everything
// outside.
EquivarianceResult equivariance_test(const std::vector<Vec3>& positions, const cvec& psi,
                                     const GridSpec& grid, int cells = 4);

}  // namespace bohmscat
