#include "bohmscat/flux.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "bohmscat/error.hpp"

namespace bohmscat {

CurrentField current_density(const Snapshot& snap) {
  const std::size_t n = snap.psi.size();
  CurrentField j;
  for (int a = 0; a < 3; ++a) {
    j[a].resize(n);
    for (std::size_t s = 0; s < n; ++s) j[a][s] = (std::conj(snap.psi[s]) * snap.grad[a][s]).imag();
  }
  return j;
}

CurrentField current_density(const ComplexField& field) {
  return current_density(make_snapshot(field));
}

double continuity_residual(const cvec& prev, const cvec& next, double dt, Propagator& prop) {
  require(dt > 0.0, "continuity_residual: dt must be positive");
  cvec lap_prev, lap_next;
  prop.laplacian(prev, lap_prev);
  prop.laplacian(next, lap_next);
  double worst = 0.0;
  for (std::size_t s = 0; s < prev.size(); ++s) {
    const double drho = (std::norm(next[s]) - std::norm(prev[s])) / dt;
    const double div = 0.5 * ((std::conj(prev[s]) * lap_prev[s]).imag() +
                              (std::conj(next[s]) * lap_next[s]).imag());
    worst = std::max(worst, std::abs(drho + div));
  }
  return worst;
}

double continuity_residual(const ComplexField& prev, const ComplexField& next, double dt) {
  require(prev.grid.n == next.grid.n, "continuity_residual: grid mismatch");
  Propagator prop(prev.grid, PotentialModel::zero());
  return continuity_residual(prev.values, next.values, dt, prop);
}

double probability_inside(const cvec& psi, const GridSpec& g, double R) {
  double s = 0.0;
  std::size_t idx = 0;
  const double R2 = R * R;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k, ++idx)
        if (norm2(g.site(i, j, k)) < R2) s += std::norm(psi[idx]);
  return s * g.cell_volume();
}

std::vector<SphereNode> sphere_quadrature(const DetectorSpec& det, double spacing) {
  require(spacing > 0.0, "sphere_quadrature: spacing must be positive");
  const double R = det.radius;
  std::vector<SphereNode> nodes;
  for (std::size_t b = 0; b < det.bins.size(); ++b) {
    const DetectorBin& bin = det.bins[b];
    const int nt = std::max(4, static_cast<int>(std::ceil(R * (bin.theta_hi - bin.theta_lo) / spacing)));
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)>
        table(gsl_integration_glfixed_table_alloc(nt), &gsl_integration_glfixed_table_free);
    const double c_lo = std::cos(bin.theta_hi);
    const double c_hi = std::cos(bin.theta_lo);
    for (int it = 0; it < nt; ++it) {
      double c = 0.0, wc = 0.0;
      gsl_integration_glfixed_point(c_lo, c_hi, it, &c, &wc, table.get());
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double dphi = bin.phi_hi - bin.phi_lo;
      const int np = std::max(8, static_cast<int>(std::ceil(R * s * dphi / spacing)));
      for (int ip = 0; ip < np; ++ip) {
        const double phi = bin.phi_lo + dphi * (ip + 0.5) / np;
        SphereNode nd;
        nd.normal = {s * std::cos(phi), s * std::sin(phi), c};
        nd.x = nd.normal * R;
        nd.weight = R * R * wc * dphi / np;
        nd.bin = static_cast<int>(b);
        nodes.push_back(nd);
      }
    }
  }
  return nodes;
}

double FluxLedger::signed_total() const {
  double s = 0.0;
  for (double v : signed_flux) s += v;
  return s;
}

FluxAccumulator::FluxAccumulator(const DetectorSpec& det, const GridSpec& grid)
    : det_(det), grid_(grid) {
  require(det.radius < grid.half_extent() - grid.dx, "sphere_flux: sphere must lie inside the grid");
  fine_ = sphere_quadrature(det, grid.dx);
  coarse_ = sphere_quadrature(det, 2.0 * grid.dx);
}

namespace {

double trilinear_real(const rvec& f, const GridSpec& g, const Vec3& x) {
  int i0[3];
  double fr[3];
  for (int a = 0; a < 3; ++a) {
    const double u = x[a] / g.dx + g.n / 2;
    const double fl = std::floor(u);
    i0[a] = static_cast<int>(fl);
    fr[a] = u - fl;
  }
  auto wrap = [&](int i) { return ((i % g.n) + g.n) % g.n; };
  double out = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        const double w = (di ? fr[0] : 1.0 - fr[0]) * (dj ? fr[1] : 1.0 - fr[1]) *
                         (dk ? fr[2] : 1.0 - fr[2]);
        out += w * f[g.index(wrap(i0[0] + di), wrap(i0[1] + dj), wrap(i0[2] + dk))];
      }
  return out;
}

// Four-point Lagrange in each axis.
double tricubic_real(const rvec& f, const GridSpec& g, const Vec3& x) {
  int i0[3];
  double w[3][4];
  for (int a = 0; a < 3; ++a) {
    const double u = x[a] / g.dx + g.n / 2;
    const double fl = std::floor(u);
    i0[a] = static_cast<int>(fl) - 1;
    const double s = u - fl;
    w[a][0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
    w[a][1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    w[a][2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
    w[a][3] = (s + 1.0) * s * (s - 1.0) / 6.0;
  }
  auto wrap = [&](int i) { return ((i % g.n) + g.n) % g.n; };
  double out = 0.0;
  for (int di = 0; di < 4; ++di)
    for (int dj = 0; dj < 4; ++dj) {
      const double wij = w[0][di] * w[1][dj];
      for (int dk = 0; dk < 4; ++dk)
        out += wij * w[2][dk] * f[g.index(wrap(i0[0] + di), wrap(i0[1] + dj), wrap(i0[2] + dk))];
    }
  return out;
}

}  // namespace

void FluxAccumulator::rates(const CurrentField& j, const std::vector<SphereNode>& nodes, bool cubic,
                            std::vector<double>& sgn, std::vector<double>* abs) const {
  sgn.assign(det_.size(), 0.0);
  if (abs) abs->assign(det_.size(), 0.0);
  auto at = [&](const rvec& f, const Vec3& x) {
    return cubic ? tricubic_real(f, grid_, x) : trilinear_real(f, grid_, x);
  };
  for (const SphereNode& nd : nodes) {
    const double jn = at(j[0], nd.x) * nd.normal.x + at(j[1], nd.x) * nd.normal.y + at(j[2], nd.x) * nd.normal.z;
    sgn[nd.bin] += nd.weight * jn;
    if (abs) (*abs)[nd.bin] += nd.weight * std::abs(jn);
  }
}

void FluxAccumulator::add(double t, const CurrentField& j) {
  require(times_.empty() || t > times_.back(), "FluxAccumulator: times must increase");
  std::vector<double> s, a, c, l;
  rates(j, fine_, true, s, &a);
  rates(j, coarse_, true, c, nullptr);
  rates(j, fine_, false, l, nullptr);
  times_.push_back(t);
  signed_rate_.push_back(std::move(s));
  abs_rate_.push_back(std::move(a));
  coarse_rate_.push_back(std::move(c));
  linear_rate_.push_back(std::move(l));
}

namespace {

std::vector<double> trapezoid(const std::vector<double>& t, const std::vector<std::vector<double>>& f,
                              std::size_t nb) {
  std::vector<double> out(nb, 0.0);
  for (std::size_t i = 1; i < t.size(); ++i)
    for (std::size_t b = 0; b < nb; ++b) out[b] += 0.5 * (t[i] - t[i - 1]) * (f[i][b] + f[i - 1][b]);
  return out;
}

// Composite Simpson on pairs of intervals; a trailing odd interval is trapezoidal.
std::vector<double> simpson(const std::vector<double>& t, const std::vector<std::vector<double>>& f,
                            std::size_t nb) {
  std::vector<double> out(nb, 0.0);
  std::size_t i = 0;
  for (; i + 2 < t.size(); i += 2) {
    const double h = 0.5 * (t[i + 2] - t[i]);
    for (std::size_t b = 0; b < nb; ++b) out[b] += h / 3.0 * (f[i][b] + 4.0 * f[i + 1][b] + f[i + 2][b]);
  }
  if (i + 1 < t.size()) {
    for (std::size_t b = 0; b < nb; ++b) out[b] += 0.5 * (t[i + 1] - t[i]) * (f[i][b] + f[i + 1][b]);
  }
  return out;
}

}  // namespace

FluxLedger FluxAccumulator::ledger() const {
  const std::size_t nb = det_.size();
  FluxLedger L;
  L.radius = det_.radius;
  if (!times_.empty()) {
    L.t_start = times_.front();
    L.t_end = times_.back();
  }
  L.signed_flux = trapezoid(times_, signed_rate_, nb);
  L.absolute_flux = trapezoid(times_, abs_rate_, nb);
  const std::vector<double> simp = simpson(times_, signed_rate_, nb);
  const std::vector<double> coarse = trapezoid(times_, coarse_rate_, nb);
  const std::vector<double> linear = trapezoid(times_, linear_rate_, nb);
  L.error.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    L.error[b] = std::abs(L.signed_flux[b] - simp[b]) + std::abs(L.signed_flux[b] - coarse[b]) +
                 std::abs(L.signed_flux[b] - linear[b]);
  }
  return L;
}

std::vector<double> cone_integrals(const ComplexField& psi_hat, const DetectorSpec& det) {
  require(psi_hat.space == Space::momentum, "cone_integrals: field must be in momentum space");
  const GridSpec& g = psi_hat.grid;
  // Cells whose corners all fall in one bin go there whole; the rest are split
  // over m^3 sub-points with a central-difference linear density, which keeps
  // each cell's total.
  const int m = 4;
  auto wrap = [&](int i) { return ((i % g.n) + g.n) % g.n; };
  auto dens = [&](int i, int j, int k) { return std::norm(psi_hat.values[g.index(wrap(i), wrap(j), wrap(k))]); };
  const double h = g.dk;
  std::vector<double> out(det.size(), 0.0);
  std::size_t idx = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      for (int k = 0; k < g.n; ++k, ++idx) {
        const double p0 = std::norm(psi_hat.values[idx]);
        if (p0 == 0.0) continue;
        // Cell integral of the density rather than its midpoint value:
        // subtract dk^2/24 of the lattice Laplacian.
        const double lap = dens(i + 1, j, k) + dens(i - 1, j, k) + dens(i, j + 1, k) + dens(i, j - 1, k) +
                           dens(i, j, k + 1) + dens(i, j, k - 1) - 6.0 * p0;
        const double p = p0 + lap / 24.0;
        const Vec3 kc{g.wavenumber(i), g.wavenumber(j), g.wavenumber(k)};
        int first = -2;
        bool uniform = norm2(kc) > 0.0;
        for (int c = 0; c < 8 && uniform; ++c) {
          const Vec3 corner = kc + Vec3{(c & 1 ? 0.5 : -0.5) * h, (c & 2 ? 0.5 : -0.5) * h, (c & 4 ? 0.5 : -0.5) * h};
          const int b = det.bin_of(corner);
          if (first == -2) first = b;
          uniform = b == first;
        }
        if (uniform) {
          if (first >= 0) out[first] += p;
          continue;
        }
        // Per unit offset in cells; the grid is stored in FFT order, so i +- 1 is
        // the neighbouring wavenumber except across the Nyquist seam.
        const Vec3 grad{0.5 * (dens(i + 1, j, k) - dens(i - 1, j, k)), 0.5 * (dens(i, j + 1, k) - dens(i, j - 1, k)),
                        0.5 * (dens(i, j, k + 1) - dens(i, j, k - 1))};
        const double inv = 1.0 / (m * m * m);
        for (int a = 0; a < m; ++a)
          for (int b2 = 0; b2 < m; ++b2)
            for (int c = 0; c < m; ++c) {
              const Vec3 off{(a + 0.5) / m - 0.5, (b2 + 0.5) / m - 0.5, (c + 0.5) / m - 0.5};
              const int b = det.bin_of(kc + off * h);
              if (b >= 0) out[b] += inv * (p + dot(grad, off));
            }
      }
  for (double& v : out) v *= g.k_cell_volume();
  return out;
}

std::vector<FastBinReport> fast_check(const FluxLedger& ledger, const ComplexField& psi_out_hat,
                                      const DetectorSpec& det) {
  return fast_check(ledger, cone_integrals(psi_out_hat, det), det);
}

std::vector<FastBinReport> fast_check(const FluxLedger& ledger, const std::vector<double>& cone,
                                      const DetectorSpec& det) {
  require(ledger.signed_flux.size() == det.size() && cone.size() == det.size(),
          "fast_check: ledger, cone integrals and detector disagree");
  std::vector<FastBinReport> out;
  for (std::size_t b = 0; b < det.size(); ++b) {
    FastBinReport r;
    r.bin = static_cast<int>(b);
    r.scored = det.bins[b].scored;
    r.signed_flux = ledger.signed_flux[b];
    r.absolute_flux = ledger.absolute_flux[b];
    r.flux_error = ledger.error[b];
    r.cone_integral = cone[b];
    r.rel_diff = cone[b] > 0.0 ? std::abs(r.signed_flux - cone[b]) / cone[b]
                               : std::numeric_limits<double>::infinity();
    r.outwardness = r.absolute_flux > 0.0 ? (r.absolute_flux - r.signed_flux) / r.absolute_flux : 0.0;
    out.push_back(r);
  }
  return out;
}

}  // namespace bohmscat
