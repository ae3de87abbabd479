#pragma once

#include <array>

#include "bohmscat/fields.hpp"

namespace bohmscat {

struct PotentialModel {
  enum class Kind { zero, gaussian_well };

  Kind kind = Kind::zero;
  double v0 = 0.0;
  double a = 1.0;

  static PotentialModel zero() { return {}; }
  static PotentialModel gaussian_well(double v0, double a);

  double at_radius(double r) const;
  double operator()(const Vec3& x) const { return at_radius(norm(x)); }
  Vec3 gradient(const Vec3& x) const;
  // |v0| for the well, 0 for the zero potential.
  double strength() const { return kind == Kind::zero ? 0.0 : std::abs(v0); }
  // Radius beyond which |V| < tol.
  double range(double tol) const;
};

struct EvolutionPlan {
  double dt = 0.025;
  double t_total = 0.0;
  int store_stride = 1;

  long steps() const;
};

// 0.5 * min(1/|v0|, 2/k_max^2).
double max_stable_dt(const GridSpec& grid, const PotentialModel& V);
void validate_plan(const EvolutionPlan& plan, const GridSpec& grid, const PotentialModel& V);

// psi and its spectral gradient at one instant.
struct Snapshot {
  double time = 0.0;
  cvec psi;
  std::array<cvec, 3> grad;
  double peak_density = 0.0;
  // DFT(psi)/n^3, filled only for spectral point evaluation.
  cvec spectrum;

  void resize(std::size_t n);
};

class Propagator {
 public:
  Propagator(const GridSpec& grid, const PotentialModel& V);

  const GridSpec& grid() const { return grid_; }
  const PotentialModel& potential() const { return V_; }
  const Fft3& fft() const { return fft_; }
  // Wavenumbers per axis in FFT order, Nyquist entry zeroed (for derivatives).
  const std::vector<double>& derivative_wavenumbers() const { return kd_; }

  // exp(-iVh/2) exp(-ik^2h/2) exp(-iVh/2); h may be negative.
  void strang_step(ComplexField& field, double h);
  // Same step; writes psi(t+h) and its gradient into out.
  void step(const Snapshot& in, double h, Snapshot& out);
  void snapshot(const cvec& psi, double t, Snapshot& out);
  void gradient(const cvec& psi, std::array<cvec, 3>& grad);
  void laplacian(const cvec& psi, cvec& out);

 private:
  void prepare(double h);
  void kinetic(cvec& spectrum) const;

  GridSpec grid_;
  PotentialModel V_;
  Fft3 fft_;
  std::vector<double> k_;
  std::vector<double> kd_;
  rvec v_sites_;
  std::array<rvec, 3> grad_v_sites_;
  double cached_h_ = 0.0;
  cvec v_half_phase_;
  std::vector<cplx> kin_axis_;
  cvec work_;
  cvec tmp_;
};

ComplexField strang_step(const ComplexField& field, const PotentialModel& V, double dt);

// Exact free evolution of a Gaussian packet.
struct FreeGaussian {
  PacketSpec spec;
  double t = 0.0;

  cplx value(const Vec3& x) const;
  std::array<cplx, 3> gradient(const Vec3& x) const;
  Vec3 center() const { return spec.center + spec.k0 * t; }
  // Envelope width sigma_t = (sigma/eps) sqrt(1 + (eps^2 t / sigma^2)^2).
  double width() const;
  Vec3 velocity(const Vec3& x) const;
  // Bohmian flow map from time 0 to t.
  Vec3 flow(const Vec3& x0) const;
  ComplexField sample(const GridSpec& grid) const;
};

FreeGaussian free_evolve_analytic(const PacketSpec& spec, double t);

// int |psi|^2 |V| d^3x
double potential_overlap(const ComplexField& field, const PotentialModel& V);
// Probability in the outermost lattice shell, `shell` sites thick.
double boundary_shell_probability(const ComplexField& field, int shell);
double boundary_shell_probability(const cvec& psi, const GridSpec& grid, int shell);
int default_shell_width(const GridSpec& grid);

struct WaveOperatorOptions {
  double dt = 0.025;
  double boundary_tol = 1e-8;
  // Relative to |v0|.
  double overlap_tol = 1e-6;
};

// exp(-iH T) exp(+iH0 T) psi_in: analytic packet placed where it was at -T_pre,
// then evolved on the grid for T_pre.
ComplexField apply_wave_operator_minus(const PacketSpec& spec, const PotentialModel& V,
                                       double T_pre, const GridSpec& grid,
                                       const WaveOperatorOptions& opts = {});

struct AsymptoteOptions {
  // Relative to |v0|.
  double overlap_tol = 1e-6;
  double boundary_tol = 1e-8;
};

// exp(+ik^2 T/2) F[psi_T](k), a momentum-space field.
ComplexField extract_out_asymptote(const ComplexField& field_at_T, const PotentialModel& V,
                                   double T, const AsymptoteOptions& opts = {});

}  // namespace bohmscat
