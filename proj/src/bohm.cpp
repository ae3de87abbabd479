#include "bohmscat/bohm.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bohmscat/error.hpp"

namespace bohmscat {

namespace {

struct Stencil {
  std::size_t idx[8];
  double w[8];
  Vec3 off[8];  // x minus corner position
};

Stencil make_stencil(const GridSpec& g, const Vec3& x) {
  Stencil s;
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double u = x[a] / g.dx + g.n / 2;
    const double fl = std::floor(u);
    i0[a] = static_cast<int>(fl);
    f[a] = u - fl;
  }
  auto wrap = [&](int i) { return ((i % g.n) + g.n) % g.n; };
  int c = 0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk, ++c) {
        s.idx[c] = g.index(wrap(i0[0] + di), wrap(i0[1] + dj), wrap(i0[2] + dk));
        s.w[c] = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) * (dk ? f[2] : 1.0 - f[2]);
        s.off[c] = {(f[0] - di) * g.dx, (f[1] - dj) * g.dx, (f[2] - dk) * g.dx};
      }
  return s;
}

LocalField trilinear(const Snapshot& snap, const Stencil& s) {
  LocalField out{cplx(0.0), {cplx(0.0), cplx(0.0), cplx(0.0)}};
  for (int c = 0; c < 8; ++c) {
    const double w = s.w[c];
    out.psi += w * snap.psi[s.idx[c]];
    for (int a = 0; a < 3; ++a) out.grad[a] += w * snap.grad[a][s.idx[c]];
  }
  return out;
}

LocalField demodulated(const Snapshot& snap, const Stencil& s, const Vec3& kappa) {
  LocalField out{cplx(0.0), {cplx(0.0), cplx(0.0), cplx(0.0)}};
  for (int c = 0; c < 8; ++c) {
    const cplx w = s.w[c] * std::polar(1.0, dot(kappa, s.off[c]));
    out.psi += w * snap.psi[s.idx[c]];
    for (int a = 0; a < 3; ++a) out.grad[a] += w * snap.grad[a][s.idx[c]];
  }
  return out;
}

LocalField phase_trilinear(const Snapshot& snap, const Stencil& s) {
  int best = 0;
  for (int c = 1; c < 8; ++c)
    if (s.w[c] > s.w[best]) best = c;
  const std::size_t b = s.idx[best];
  const double rho = std::norm(snap.psi[b]);
  if (!(rho > 0.0)) return trilinear(snap, s);
  LocalField site{snap.psi[b], {snap.grad[0][b], snap.grad[1][b], snap.grad[2][b]}};
  LocalField out = demodulated(snap, s, velocity_from(site));
  const double rho2 = std::norm(out.psi);
  if (rho2 > 0.0 && std::isfinite(rho2)) out = demodulated(snap, s, velocity_from(out));
  return out;
}

LocalField spectral(const Snapshot& snap, const GridSpec& g, const Vec3& x) {
  require(snap.spectrum.size() == g.size(), "spectral interpolation needs Snapshot::spectrum");
  const int n = g.n;
  const double origin = g.coord(0);
  std::vector<cplx> e[3], de[3];
  for (int a = 0; a < 3; ++a) {
    e[a].resize(n);
    de[a].resize(n);
    for (int m = 0; m < n; ++m) {
      const double k = g.wavenumber(m);
      e[a][m] = std::polar(1.0, k * (x[a] - origin));
      const double kd = (m == n / 2) ? 0.0 : k;
      de[a][m] = cplx(0.0, kd) * e[a][m];
    }
  }
  LocalField out{cplx(0.0), {cplx(0.0), cplx(0.0), cplx(0.0)}};
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i) {
    cplx row_psi(0.0), row_dy(0.0), row_dz(0.0);
    for (int j = 0; j < n; ++j) {
      cplx az(0.0), bz(0.0);
      const cplx* c = &snap.spectrum[idx];
      for (int k = 0; k < n; ++k) {
        az += c[k] * e[2][k];
        bz += c[k] * de[2][k];
      }
      idx += n;
      row_psi += e[1][j] * az;
      row_dy += de[1][j] * az;
      row_dz += e[1][j] * bz;
    }
    out.psi += e[0][i] * row_psi;
    out.grad[0] += de[0][i] * row_psi;
    out.grad[1] += e[0][i] * row_dy;
    out.grad[2] += e[0][i] * row_dz;
  }
  return out;
}

}  // namespace

void prepare_spectrum(Snapshot& snap, const Fft3& fft) {
  snap.spectrum.resize(snap.psi.size());
  fft.forward(snap.psi.data(), snap.spectrum.data());
  const double inv = 1.0 / static_cast<double>(snap.psi.size());
  for (cplx& c : snap.spectrum) c *= inv;
}

LocalField sample_field(const Snapshot& snap, const GridSpec& grid, const Vec3& x,
                        Interpolation mode) {
  switch (mode) {
    case Interpolation::trilinear:
      return trilinear(snap, make_stencil(grid, x));
    case Interpolation::phase_trilinear:
      return phase_trilinear(snap, make_stencil(grid, x));
    case Interpolation::spectral:
      return spectral(snap, grid, x);
  }
  return {};
}

VelocitySample velocity_field(const Snapshot& snap, const GridSpec& grid, const Vec3& x,
                              Interpolation mode, double node_floor) {
  const LocalField f = sample_field(snap, grid, x, mode);
  VelocitySample out;
  out.density = std::norm(f.psi);
  if (!(out.density >= node_floor * snap.peak_density) || out.density == 0.0) {
    out.stalled = true;
    return out;
  }
  out.v = velocity_from(f);
  return out;
}

Snapshot make_snapshot(const ComplexField& field) {
  require(field.space == Space::position, "make_snapshot: field must be in position space");
  Propagator p(field.grid, PotentialModel::zero());
  Snapshot s;
  p.snapshot(field.values, field.time, s);
  return s;
}

std::optional<Vec3> velocity_field(const ComplexField& field, const Vec3& x) {
  const Snapshot s = make_snapshot(field);
  const VelocitySample v = velocity_field(s, field.grid, x, Interpolation::trilinear);
  if (v.stalled) return std::nullopt;
  return v.v;
}

double DetectorBin::solid_angle() const {
  return (phi_hi - phi_lo) * (std::cos(theta_lo) - std::cos(theta_hi));
}

DetectorSpec make_detector(double radius, const BinLayout& L) {
  require(radius > 0.0, "detector: radius must be positive");
  require(L.theta_step_deg > 0.0, "detector: theta step must be positive");
  require(L.n_phi >= 1, "detector: n_phi must be >= 1");
  require(L.theta_lo_deg > 0.0 && L.theta_lo_deg < L.theta_hi_deg && L.theta_hi_deg <= 180.0,
          "detector: need 0 < theta_lo < theta_hi <= 180");
  const double span = (L.theta_hi_deg - L.theta_lo_deg) / L.theta_step_deg;
  require(std::abs(span - std::round(span)) < 1e-9,
          "detector: theta range must be a whole number of steps");
  const double deg = M_PI / 180.0;
  DetectorSpec d;
  d.radius = radius;
  d.theta_min = L.theta_min_deg * deg;
  d.bins.push_back({0.0, L.theta_lo_deg * deg, 0.0, 2.0 * M_PI, false});
  const int rings = static_cast<int>(std::lround(span));
  for (int r = 0; r < rings; ++r) {
    const double lo = (L.theta_lo_deg + r * L.theta_step_deg) * deg;
    const double hi = (L.theta_lo_deg + (r + 1) * L.theta_step_deg) * deg;
    for (int p = 0; p < L.n_phi; ++p) {
      d.bins.push_back({lo, hi, 2.0 * M_PI * p / L.n_phi, 2.0 * M_PI * (p + 1) / L.n_phi, true});
    }
  }
  if (L.theta_hi_deg < 180.0) d.bins.push_back({L.theta_hi_deg * deg, M_PI, 0.0, 2.0 * M_PI, false});
  d.validate();
  return d;
}

void DetectorSpec::validate() const {
  require(radius > 0.0, "detector: radius must be positive");
  require(theta_min > 0.0, "detector: forward exclusion must be positive");
  double total = 0.0;
  for (const DetectorBin& b : bins) {
    require(b.theta_lo < b.theta_hi && b.phi_lo < b.phi_hi, "detector: empty bin");
    if (b.scored && b.theta_lo < theta_min - 1e-12) {
      fail(ErrorKind::invalid_argument, "detector: scored bin reaches into the forward exclusion");
    }
    total += b.solid_angle();
  }
  require(std::abs(total - 4.0 * M_PI) < 1e-9, "detector: bins must tile the sphere");
}

int DetectorSpec::bin_of(const Vec3& dir) const {
  const double th = polar_angle(dir);
  const double ph = azimuth(dir);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const DetectorBin& b = bins[i];
    const bool th_in = th >= b.theta_lo && (th < b.theta_hi || (b.theta_hi >= M_PI && th <= M_PI));
    if (th_in && ph >= b.phi_lo && ph < b.phi_hi) return static_cast<int>(i);
  }
  return -1;
}

Trajectory make_trajectory(const Vec3& q0, double t0, bool record_path) {
  Trajectory t;
  t.q0 = q0;
  t.cur.t = t0;
  t.cur.x = q0;
  if (record_path) t.path.push_back(t.cur);
  return t;
}

namespace {

struct Window {
  const Snapshot* s[3];
  const GridSpec* grid;
  Interpolation mode;
  double floor;
  double peak;

  // theta in [0, 1] across [t, t+dt]; between snapshots psi and grad psi are
  // interpolated quadratically in time at the point.
  VelocitySample eval(double theta, const Vec3& x) const {
    if (theta == 0.0) return velocity_field(*s[0], *grid, x, mode, floor);
    if (theta == 0.5) return velocity_field(*s[1], *grid, x, mode, floor);
    if (theta == 1.0) return velocity_field(*s[2], *grid, x, mode, floor);
    const double l0 = 2.0 * (theta - 0.5) * (theta - 1.0);
    const double lh = -4.0 * theta * (theta - 1.0);
    const double l1 = 2.0 * theta * (theta - 0.5);
    const double w[3] = {l0, lh, l1};
    LocalField f{cplx(0.0), {cplx(0.0), cplx(0.0), cplx(0.0)}};
    for (int q = 0; q < 3; ++q) {
      const LocalField g = sample_field(*s[q], *grid, x, mode);
      f.psi += w[q] * g.psi;
      for (int a = 0; a < 3; ++a) f.grad[a] += w[q] * g.grad[a];
    }
    VelocitySample out;
    out.density = std::norm(f.psi);
    if (!(out.density >= floor * peak) || out.density == 0.0) {
      out.stalled = true;
      return out;
    }
    out.v = velocity_from(f);
    return out;
  }
};

double max_abs(const Vec3& v) { return std::max({std::abs(v.x), std::abs(v.y), std::abs(v.z)}); }

}  // namespace

void advance_trajectories(const Snapshot& s0, const Snapshot& s_half, const Snapshot& s1,
                          const GridSpec& grid, std::vector<Trajectory>& trajectories,
                          const TrajectoryOptions& opts, SegmentSink* sink, long step_index) {
  const double dt = s1.time - s0.time;
  require(dt > 0.0 && std::abs((s_half.time - s0.time) - 0.5 * dt) < 1e-9 * std::max(1.0, dt),
          "advance_trajectories: snapshots must be at t, t+dt/2, t+dt");
  const double peak = std::max({s0.peak_density, s_half.peak_density, s1.peak_density});
  const Window win{{&s0, &s_half, &s1}, &grid, opts.mode, opts.node_floor, peak};
  const double max_disp = opts.c_step * grid.dx;
  const double safe = grid.half_extent() - opts.guard;
  std::vector<PathPoint> pts;

  for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
    Trajectory& tr = trajectories[ti];
    if (tr.status != TrajectoryStatus::active) continue;
    if (!tr.has_velocity) {
      const VelocitySample v = win.eval(0.0, tr.cur.x);
      if (v.stalled) {
        tr.status = TrajectoryStatus::stalled;
        continue;
      }
      tr.cur.v = v.v;
      tr.has_velocity = true;
    }

    bool stalled = false;
    for (int halvings = 0;; ++halvings) {
      const int nsub = 1 << halvings;
      const double h = dt / nsub;
      pts.clear();
      pts.push_back(tr.cur);
      bool too_far = false;
      stalled = false;
      for (int sub = 0; sub < nsub && !stalled; ++sub) {
        const PathPoint& p = pts.back();
        const double thm = (sub + 0.5) / nsub;
        const double th1 = static_cast<double>(sub + 1) / nsub;
        const Vec3 k1 = p.v;
        const VelocitySample k2 = win.eval(thm, p.x + k1 * (0.5 * h));
        if (k2.stalled) { stalled = true; break; }
        const VelocitySample k3 = win.eval(thm, p.x + k2.v * (0.5 * h));
        if (k3.stalled) { stalled = true; break; }
        const VelocitySample k4 = win.eval(th1, p.x + k3.v * h);
        if (k4.stalled) { stalled = true; break; }
        const Vec3 dx = (k1 + 2.0 * k2.v + 2.0 * k3.v + k4.v) * (h / 6.0);
        if (max_abs(dx) > max_disp && halvings < opts.max_halvings) {
          too_far = true;
          break;
        }
        PathPoint q;
        q.t = s0.time + th1 * dt;
        q.x = p.x + dx;
        const VelocitySample ve = win.eval(th1, q.x);
        if (ve.stalled) { stalled = true; break; }
        q.v = ve.v;
        pts.push_back(q);
      }
      if (stalled || !too_far) {
        tr.max_subdivision = std::max(tr.max_subdivision, halvings);
        break;
      }
    }
    if (stalled) {
      tr.status = TrajectoryStatus::stalled;
      continue;
    }
    for (std::size_t q = 1; q < pts.size(); ++q) {
      if (sink) sink->segment(ti, pts[q - 1], pts[q]);
    }
    tr.cur = pts.back();
    if (opts.record_path && ((step_index + 1) % std::max(1, opts.record_stride) == 0)) {
      tr.path.push_back(tr.cur);
    }
    if (max_abs(tr.cur.x) > safe) {
      tr.status = TrajectoryStatus::escaped_grid;
    } else if (norm(tr.cur.x) > opts.freeze_radius) {
      tr.status = TrajectoryStatus::exited;
    }
  }
}

CrossingTracker::CrossingTracker(const DetectorSpec* det) : det_(det) {
  if (det_) {
    rec_.plus_by_bin.assign(det_->size(), 0);
    rec_.minus_by_bin.assign(det_->size(), 0);
  }
}

void CrossingTracker::start(const PathPoint& p0) {
  rec_.started_inside = det_ && norm(p0.x) <= det_->radius;
}

void CrossingTracker::crossing(double t, const Vec3& x, const Vec3& v, bool outward) {
  const double r = norm(x);
  const Vec3 n = x * (1.0 / r);
  if (std::abs(dot(v, n)) < grazing_speed) ++rec_.grazing;
  const int bin = det_->bin_of(n);
  if (outward) {
    ++rec_.n_plus;
    if (bin >= 0) ++rec_.plus_by_bin[bin];
    if (!std::isfinite(rec_.t_exit)) {
      rec_.t_exit = t;
      rec_.exit_direction = n;
    }
  } else {
    ++rec_.n_minus;
    if (bin >= 0) ++rec_.minus_by_bin[bin];
  }
}

void CrossingTracker::feed(const PathPoint& a, const PathPoint& b) {
  const double R = det_->radius;
  const double ra = norm(a.x);
  const double rb = norm(b.x);
  const double dt = b.t - a.t;
  const bool in_a = ra < R;
  const bool in_b = rb < R;
  const double reach = norm(b.x - a.x) + dt * (norm(a.v) + norm(b.v));
  if (in_a == in_b && std::min(std::abs(ra - R), std::abs(rb - R)) > reach) return;

  // Cubic Hermite through (x_a, v_a), (x_b, v_b).
  auto point = [&](double s) {
    const double s2 = s * s, s3 = s2 * s;
    return a.x * (2 * s3 - 3 * s2 + 1) + a.v * (dt * (s3 - 2 * s2 + s)) + b.x * (-2 * s3 + 3 * s2) +
           b.v * (dt * (s3 - s2));
  };
  auto deriv = [&](double s) {
    const double s2 = s * s;
    return (a.x * (6 * s2 - 6 * s) + a.v * (dt * (3 * s2 - 4 * s + 1)) + b.x * (-6 * s2 + 6 * s) +
            b.v * (dt * (3 * s2 - 2 * s))) *
           (1.0 / dt);
  };
  Vec3 prev = a.x;
  double r_prev = ra;
  for (int i = 1; i <= refine_points; ++i) {
    const double s = static_cast<double>(i) / refine_points;
    const Vec3 cur = (i == refine_points) ? b.x : point(s);
    const double r_cur = (i == refine_points) ? rb : norm(cur);
    const bool in_prev = r_prev < R;
    const bool in_cur = r_cur < R;
    if (in_prev != in_cur) {
      const double lam = (R - r_prev) / (r_cur - r_prev);
      const Vec3 x = prev + (cur - prev) * lam;
      const double sc = (i - 1 + lam) / refine_points;
      crossing(a.t + sc * dt, x, deriv(sc), in_prev);
    }
    prev = cur;
    r_prev = r_cur;
  }
}

CrossingRecord detect_crossings(const Trajectory& trajectory, const DetectorSpec& det) {
  require(!trajectory.path.empty(), "detect_crossings: trajectory has no recorded path");
  CrossingTracker tracker(&det);
  tracker.start(trajectory.path.front());
  for (std::size_t i = 1; i < trajectory.path.size(); ++i) {
    tracker.feed(trajectory.path[i - 1], trajectory.path[i]);
  }
  return tracker.record();
}

int detection_bin(const CrossingRecord& rec, const DetectorSpec& det) {
  if (!rec.started_inside || !std::isfinite(rec.t_exit) || !rec.exit_direction) return -1;
  return det.bin_of(*rec.exit_direction);
}

CrossingTally::CrossingTally(std::size_t bins)
    : nsig_sum(bins, 0.0), nsig_sq(bins, 0.0), ntot_sum(bins, 0.0), ndet_sum(bins, 0.0) {}

void CrossingTally::add(const CrossingRecord& rec, const DetectorSpec& det, bool still_active) {
  ++count;
  for (std::size_t b = 0; b < nsig_sum.size(); ++b) {
    const double s = rec.plus_by_bin.empty() ? 0.0 : rec.plus_by_bin[b] - rec.minus_by_bin[b];
    nsig_sum[b] += s;
    nsig_sq[b] += s * s;
    ntot_sum[b] += rec.plus_by_bin.empty() ? 0.0 : rec.plus_by_bin[b] + rec.minus_by_bin[b];
  }
  const int bin = detection_bin(rec, det);
  if (bin >= 0) {
    ndet_sum[bin] += 1.0;
    full_ndet_sum += 1.0;
  } else if (still_active) {
    ++undetected_active;
  }
  full_nsig_sum += rec.n_sig();
  full_nsig_sq += static_cast<double>(rec.n_sig()) * rec.n_sig();
  full_nminus_sum += rec.n_minus;
  full_nminus_sq += static_cast<double>(rec.n_minus) * rec.n_minus;
  grazing += rec.grazing;
}

void CrossingTally::merge(const CrossingTally& o) {
  require(o.nsig_sum.size() == nsig_sum.size(), "CrossingTally::merge: bin count mismatch");
  count += o.count;
  for (std::size_t b = 0; b < nsig_sum.size(); ++b) {
    nsig_sum[b] += o.nsig_sum[b];
    nsig_sq[b] += o.nsig_sq[b];
    ntot_sum[b] += o.ntot_sum[b];
    ndet_sum[b] += o.ndet_sum[b];
  }
  full_nsig_sum += o.full_nsig_sum;
  full_nsig_sq += o.full_nsig_sq;
  full_nminus_sum += o.full_nminus_sum;
  full_nminus_sq += o.full_nminus_sq;
  full_ndet_sum += o.full_ndet_sum;
  grazing += o.grazing;
  undetected_active += o.undetected_active;
}

namespace {

MeanSE mean_se(double sum, double sq, std::size_t n) {
  MeanSE m;
  if (n == 0) return m;
  m.mean = sum / n;
  if (n > 1) m.se = std::sqrt(std::max(0.0, sq / n - m.mean * m.mean) / (n - 1));
  return m;
}

}  // namespace

CrossingSummary summarize(const CrossingTally& t) {
  CrossingSummary s;
  s.count = t.count;
  const std::size_t nb = t.nsig_sum.size();
  for (std::size_t b = 0; b < nb; ++b) {
    s.n_sig.push_back(mean_se(t.nsig_sum[b], t.nsig_sq[b], t.count));
    // n_tot is not squared-tracked; its SE is not reported.
    s.n_tot.push_back({t.count ? t.ntot_sum[b] / t.count : 0.0, 0.0});
    s.n_det.push_back(mean_se(t.ndet_sum[b], t.ndet_sum[b], t.count));
  }
  s.full_n_sig = mean_se(t.full_nsig_sum, t.full_nsig_sq, t.count);
  s.full_n_minus = mean_se(t.full_nminus_sum, t.full_nminus_sq, t.count);
  s.full_n_det = mean_se(t.full_ndet_sum, t.full_ndet_sum, t.count);
  s.grazing = t.grazing;
  return s;
}

CrossingSummary crossing_expectations(const std::vector<CrossingRecord>& records,
                                      const DetectorSpec& det) {
  CrossingTally t(det.size());
  for (const CrossingRecord& r : records) t.add(r, det);
  return summarize(t);
}

EquivarianceResult equivariance_test(const std::vector<Vec3>& positions, const cvec& psi,
                                     const GridSpec& g, int cells) {
  require(cells >= 2, "equivariance_test: need at least 2 cells per axis");
  require(psi.size() == g.size(), "equivariance_test: field size mismatch");
  const int n = g.n;
  // Marginal moments of |psi|^2.
  double total = 0.0;
  Vec3 m1, m2;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const double p = std::norm(psi[idx]);
        const Vec3 x = g.site(i, j, k);
        total += p;
        for (int a = 0; a < 3; ++a) {
          m1[a] += p * x[a];
          m2[a] += p * x[a] * x[a];
        }
      }
  std::vector<std::vector<double>> edges(3);
  for (int a = 0; a < 3; ++a) {
    const double mu = m1[a] / total;
    const double sd = std::sqrt(std::max(0.0, m2[a] / total - mu * mu));
    // mu +- 2 sd, widened to at least one lattice spacing per cell.
    const double span = std::max(4.0 * sd, (cells + 1) * g.dx);
    for (int e = 0; e <= cells; ++e) {
      const double raw = mu - 0.5 * span + span * e / cells;
      const double snapped = (std::round(raw / g.dx - 0.5) + 0.5) * g.dx;
      edges[a].push_back(snapped);
    }
    for (int e = 1; e <= cells; ++e) {
      require(edges[a][e] > edges[a][e - 1], "equivariance_test: cells narrower than the lattice");
    }
  }
  auto cell_of = [&](const Vec3& x) {
    int c[3];
    for (int a = 0; a < 3; ++a) {
      const auto& ed = edges[a];
      if (x[a] < ed.front() || x[a] >= ed.back()) return -1;
      c[a] = static_cast<int>(std::upper_bound(ed.begin(), ed.end(), x[a]) - ed.begin()) - 1;
    }
    return (c[0] * cells + c[1]) * cells + c[2];
  };
  const int ncell = cells * cells * cells;
  std::vector<double> expected(ncell + 1, 0.0), observed(ncell + 1, 0.0);
  idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k, ++idx) {
        const int c = cell_of(g.site(i, j, k));
        expected[c < 0 ? ncell : c] += std::norm(psi[idx]) / total;
      }
  for (const Vec3& x : positions) {
    const int c = cell_of(x);
    observed[c < 0 ? ncell : c] += 1.0;
  }
  EquivarianceResult r;
  const double N = static_cast<double>(positions.size());
  r.min_expected = N;
  for (int c = 0; c <= ncell; ++c) {
    const double e = expected[c] * N;
    if (e <= 0.0) continue;
    r.min_expected = std::min(r.min_expected, e);
    r.chi2 += (observed[c] - e) * (observed[c] - e) / e;
    ++r.dof;
  }
  r.dof -= 1;
  r.p_value = gsl_cdf_chisq_Q(r.chi2, r.dof);
  return r;
}

}  // namespace bohmscat
