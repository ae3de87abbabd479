#include "bohmscat/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bohmscat/error.hpp"

namespace bohmscat {

PotentialModel PotentialModel::gaussian_well(double v0, double a) {
  require(a > 0.0 && std::isfinite(a), "potential: range a must be positive");
  require(std::isfinite(v0), "potential: v0 must be finite");
  PotentialModel V;
  V.kind = Kind::gaussian_well;
  V.v0 = v0;
  V.a = a;
  return V;
}

double PotentialModel::at_radius(double r) const {
  if (kind == Kind::zero) return 0.0;
  return v0 * std::exp(-r * r / (2.0 * a * a));
}

Vec3 PotentialModel::gradient(const Vec3& x) const {
  if (kind == Kind::zero) return {};
  return x * (-at_radius(norm(x)) / (a * a));
}

double PotentialModel::range(double tol) const {
  if (kind == Kind::zero || std::abs(v0) <= tol) return 0.0;
  return a * std::sqrt(2.0 * std::log(std::abs(v0) / tol));
}

long EvolutionPlan::steps() const { return std::lround(t_total / dt); }

double max_stable_dt(const GridSpec& grid, const PotentialModel& V) {
  double lim = 2.0 / (grid.k_max * grid.k_max);
  if (V.strength() > 0.0) lim = std::min(lim, 1.0 / V.strength());
  return 0.5 * lim;
}

void validate_plan(const EvolutionPlan& plan, const GridSpec& grid, const PotentialModel& V) {
  if (!(plan.dt > 0.0)) fail(ErrorKind::invalid_argument, "evolution: dt must be positive");
  if (plan.store_stride < 1) fail(ErrorKind::invalid_argument, "evolution: store_stride must be >= 1");
  const double lim = max_stable_dt(grid, V);
  if (plan.dt > lim * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "evolution: dt = " << plan.dt << " exceeds 0.5*min(1/|v0|, 2/k_max^2) = " << lim;
    fail(ErrorKind::invalid_argument, msg.str());
  }
  if (plan.t_total < 0.0) fail(ErrorKind::invalid_argument, "evolution: t_total must be >= 0");
  const double r = plan.t_total / plan.dt;
  if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
    fail(ErrorKind::invalid_argument, "evolution: t_total/dt must be an integer");
  }
}

void Snapshot::resize(std::size_t n) {
  psi.resize(n);
  for (auto& g : grad) g.resize(n);
}

Propagator::Propagator(const GridSpec& grid, const PotentialModel& V)
    : grid_(grid), V_(V), fft_(grid.n) {
  const int n = grid.n;
  k_.resize(n);
  kd_.resize(n);
  for (int i = 0; i < n; ++i) {
    k_[i] = grid.wavenumber(i);
    kd_[i] = (i == n / 2) ? 0.0 : k_[i];
  }
  const std::size_t total = grid.size();
  v_sites_.assign(total, 0.0);
  for (auto& g : grad_v_sites_) g.assign(total, 0.0);
  if (V.kind != PotentialModel::Kind::zero) {
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++idx) {
          const Vec3 x = grid.site(i, j, k);
          v_sites_[idx] = V(x);
          const Vec3 g = V.gradient(x);
          grad_v_sites_[0][idx] = g.x;
          grad_v_sites_[1][idx] = g.y;
          grad_v_sites_[2][idx] = g.z;
        }
  }
  work_.resize(total);
  tmp_.resize(total);
  v_half_phase_.resize(total);
  kin_axis_.resize(n);
  cached_h_ = std::numeric_limits<double>::quiet_NaN();
}

void Propagator::prepare(double h) {
  if (h == cached_h_) return;
  cached_h_ = h;
  for (std::size_t s = 0; s < v_sites_.size(); ++s) {
    v_half_phase_[s] = std::polar(1.0, -0.5 * h * v_sites_[s]);
  }
  for (int i = 0; i < grid_.n; ++i) kin_axis_[i] = std::polar(1.0, -0.5 * h * k_[i] * k_[i]);
}

// Multiplies by exp(-ik^2h/2)/n^3; the 1/n^3 completes the inverse DFT.
void Propagator::kinetic(cvec& spectrum) const {
  const int n = grid_.n;
  const double inv = 1.0 / static_cast<double>(grid_.size());
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    const cplx ki = kin_axis_[i] * inv;
    for (int j = 0; j < n; ++j) {
      const cplx kij = ki * kin_axis_[j];
      for (int k = 0; k < n; ++k, ++idx) spectrum[idx] *= kij * kin_axis_[k];
    }
  }
}

void Propagator::strang_step(ComplexField& field, double h) {
  require(field.space == Space::position, "strang_step: field must be in position space");
  require(field.grid.n == grid_.n, "strang_step: grid mismatch");
  prepare(h);
  cvec& v = field.values;
  for (std::size_t s = 0; s < v.size(); ++s) v[s] *= v_half_phase_[s];
  fft_.forward(v.data(), v.data());
  kinetic(v);
  fft_.backward(v.data(), v.data());
  for (std::size_t s = 0; s < v.size(); ++s) v[s] *= v_half_phase_[s];
  field.time += h;
}

void Propagator::step(const Snapshot& in, double h, Snapshot& out) {
  prepare(h);
  const std::size_t total = grid_.size();
  const int n = grid_.n;
  out.resize(total);
  for (std::size_t s = 0; s < total; ++s) work_[s] = in.psi[s] * v_half_phase_[s];
  fft_.forward(work_.data(), work_.data());
  kinetic(work_);
  fft_.backward(work_.data(), out.psi.data());
  for (int a = 0; a < 3; ++a) {
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++idx) {
          const double ka = a == 0 ? kd_[i] : (a == 1 ? kd_[j] : kd_[k]);
          tmp_[idx] = cplx(-ka * work_[idx].imag(), ka * work_[idx].real());
        }
    fft_.backward(tmp_.data(), out.grad[a].data());
  }
  // grad(e^{-iVh/2} phi) = e^{-iVh/2} (grad phi - i (h/2) grad V phi)
  double peak = 0.0;
  const bool has_v = V_.kind != PotentialModel::Kind::zero;
  for (std::size_t s = 0; s < total; ++s) {
    const cplx ph = v_half_phase_[s];
    const cplx phi = out.psi[s];
    for (int a = 0; a < 3; ++a) {
      cplx g = out.grad[a][s];
      if (has_v) g -= cplx(0.0, 0.5 * h * grad_v_sites_[a][s]) * phi;
      out.grad[a][s] = ph * g;
    }
    out.psi[s] = ph * phi;
    peak = std::max(peak, std::norm(out.psi[s]));
  }
  out.peak_density = peak;
  out.time = in.time + h;
}

void Propagator::gradient(const cvec& psi, std::array<cvec, 3>& grad) {
  const std::size_t total = grid_.size();
  const int n = grid_.n;
  const double inv = 1.0 / static_cast<double>(total);
  fft_.forward(psi.data(), work_.data());
  for (int a = 0; a < 3; ++a) {
    grad[a].resize(total);
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k, ++idx) {
          const double ka = (a == 0 ? kd_[i] : (a == 1 ? kd_[j] : kd_[k])) * inv;
          tmp_[idx] = cplx(-ka * work_[idx].imag(), ka * work_[idx].real());
        }
    fft_.backward(tmp_.data(), grad[a].data());
  }
}

void Propagator::snapshot(const cvec& psi, double t, Snapshot& out) {
  out.resize(grid_.size());
  if (&out.psi != &psi) out.psi = psi;
  gradient(out.psi, out.grad);
  double peak = 0.0;
  for (const cplx& v : out.psi) peak = std::max(peak, std::norm(v));
  out.peak_density = peak;
  out.time = t;
}

void Propagator::laplacian(const cvec& psi, cvec& out) {
  const std::size_t total = grid_.size();
  const int n = grid_.n;
  const double inv = 1.0 / static_cast<double>(total);
  out.resize(total);
  fft_.forward(psi.data(), work_.data());
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx)
        work_[idx] *= -(k_[i] * k_[i] + k_[j] * k_[j] + k_[k] * k_[k]) * inv;
  fft_.backward(work_.data(), out.data());
}

ComplexField strang_step(const ComplexField& field, const PotentialModel& V, double dt) {
  Propagator p(field.grid, V);
  ComplexField out = field;
  p.strang_step(out, dt);
  return out;
}

cplx FreeGaussian::value(const Vec3& x) const {
  const double w = spec.width();
  const cplx alpha(1.0, t / (w * w));
  const Vec3 u = x - spec.center;
  const Vec3 c = u - spec.k0 * t;
  const double amp = std::pow(M_PI * w * w, -0.75);
  const cplx expo = -norm2(c) / (2.0 * w * w * alpha) +
                    cplx(0.0, dot(spec.k0, u) - 0.5 * norm2(spec.k0) * t);
  return amp * std::pow(alpha, -1.5) * std::exp(expo);
}

std::array<cplx, 3> FreeGaussian::gradient(const Vec3& x) const {
  const double w = spec.width();
  const cplx alpha(1.0, t / (w * w));
  const Vec3 c = x - center();
  const cplx psi = value(x);
  std::array<cplx, 3> g;
  for (int a = 0; a < 3; ++a) g[a] = psi * (-c[a] / (w * w * alpha) + cplx(0.0, spec.k0[a]));
  return g;
}

double FreeGaussian::width() const {
  const double w = spec.width();
  const double tau = t / (w * w);
  return w * std::sqrt(1.0 + tau * tau);
}

Vec3 FreeGaussian::velocity(const Vec3& x) const {
  const double w = spec.width();
  const double tau = t / (w * w);
  return spec.k0 + (x - center()) * (t / (w * w * w * w * (1.0 + tau * tau)));
}

Vec3 FreeGaussian::flow(const Vec3& x0) const {
  return center() + (x0 - spec.center) * (width() / spec.width());
}

ComplexField FreeGaussian::sample(const GridSpec& grid) const {
  ComplexField f(grid, t);
  const int n = grid.n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) f.values[grid.index(i, j, k)] = value(grid.site(i, j, k));
  return f;
}

FreeGaussian free_evolve_analytic(const PacketSpec& spec, double t) {
  validate_packet(spec);
  return FreeGaussian{spec, t};
}

double potential_overlap(const ComplexField& field, const PotentialModel& V) {
  if (V.kind == PotentialModel::Kind::zero) return 0.0;
  const GridSpec& g = field.grid;
  double s = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k, ++idx)
        s += std::norm(field.values[idx]) * std::abs(V(g.site(i, j, k)));
  return s * g.cell_volume();
}

int default_shell_width(const GridSpec& grid) { return std::max(2, grid.n / 16); }

double boundary_shell_probability(const cvec& psi, const GridSpec& g, int shell) {
  const int n = g.n;
  auto edge = [&](int i) { return i < shell || i >= n - shell; };
  double s = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    const bool ei = edge(i);
    for (int j = 0; j < n; ++j) {
      const bool eij = ei || edge(j);
      for (int k = 0; k < n; ++k, ++idx)
        if (eij || edge(k)) s += std::norm(psi[idx]);
    }
  }
  return s * g.cell_volume();
}

double boundary_shell_probability(const ComplexField& field, int shell) {
  return boundary_shell_probability(field.values, field.grid, shell);
}

ComplexField apply_wave_operator_minus(const PacketSpec& spec, const PotentialModel& V,
                                       double T_pre, const GridSpec& grid,
                                       const WaveOperatorOptions& opts) {
  require(T_pre > 0.0, "wave operator: T_pre must be positive");
  validate_packet_on_grid(spec, grid);
  ComplexField f = free_evolve_analytic(spec, -T_pre).sample(grid);
  f.normalize();
  const double leak = boundary_shell_probability(f, default_shell_width(grid));
  if (leak > opts.boundary_tol) {
    std::ostringstream msg;
    msg << "boundary-leakage: packet at -T_pre has " << leak << " probability in the boundary shell";
    fail(ErrorKind::physics_precondition, msg.str());
  }
  if (V.strength() > 0.0) {
    const double ov = potential_overlap(f, V);
    if (ov > opts.overlap_tol * V.strength()) {
      std::ostringstream msg;
      msg << "packet-overlaps-potential-at-injection: int |psi|^2 |V| = " << ov;
      fail(ErrorKind::physics_precondition, msg.str());
    }
  }
  const long steps = std::max(1L, std::lround(std::ceil(T_pre / opts.dt - 1e-9)));
  const double h = T_pre / static_cast<double>(steps);
  Propagator p(grid, V);
  for (long s = 0; s < steps; ++s) p.strang_step(f, h);
  f.time = 0.0;
  return f;
}

ComplexField extract_out_asymptote(const ComplexField& field_at_T, const PotentialModel& V,
                                   double T, const AsymptoteOptions& opts) {
  require(field_at_T.space == Space::position, "out asymptote: field must be in position space");
  if (V.strength() > 0.0) {
    const double ov = potential_overlap(field_at_T, V);
    if (ov > opts.overlap_tol * V.strength()) {
      std::ostringstream msg;
      msg << "potential-overlap-too-large: int |psi_T|^2 |V| = " << ov << " at T = " << T;
      fail(ErrorKind::physics_precondition, msg.str());
    }
  }
  const double leak = boundary_shell_probability(field_at_T, default_shell_width(field_at_T.grid));
  if (leak > opts.boundary_tol) {
    std::ostringstream msg;
    msg << "wrap-around contamination: boundary-shell probability " << leak << " at T = " << T;
    fail(ErrorKind::physics_precondition, msg.str());
  }
  ComplexField out = to_momentum(field_at_T);
  const GridSpec& g = out.grid;
  std::size_t idx = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k, ++idx) {
        const double k2 = g.wavenumber(i) * g.wavenumber(i) + g.wavenumber(j) * g.wavenumber(j) +
                          g.wavenumber(k) * g.wavenumber(k);
        out.values[idx] *= std::polar(1.0, 0.5 * k2 * T);
      }
  return out;
}

}  // namespace bohmscat
