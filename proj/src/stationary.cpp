#include "bohmscat/stationary.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "bohmscat/error.hpp"

namespace bohmscat {

namespace {

using GlTable = std::unique_ptr<gsl_integration_glfixed_table,
                                decltype(&gsl_integration_glfixed_table_free)>;

GlTable gl_table(int n) {
  return GlTable(gsl_integration_glfixed_table_alloc(n), &gsl_integration_glfixed_table_free);
}

double default_step(const PotentialModel& V, double k) {
  double h = 1.0 / (100.0 * k);
  if (V.kind != PotentialModel::Kind::zero) h = std::min(h, V.a / 100.0);
  return h;
}

// Numerov for u'' = g u on r_n = n h, n = 0..n_end; returns u at n1 and n_end.
// u starts as the regular series r^{l+1} (1 + b r^2).
std::pair<double, double> numerov(int l, const std::function<double(double)>& g_no_centrifugal,
                                  double g0, double h, int n1, int n_end) {
  const double ll = l * (l + 1.0);
  auto g = [&](double r) { return g_no_centrifugal(r) + ll / (r * r); };
  const double b = g0 / (2.0 * (2.0 * l + 3.0));
  auto series = [&](double r) { return std::pow(r, l + 1) * (1.0 + b * r * r); };
  double u_prev = series(h), u_cur = series(2.0 * h);
  double f_prev = 1.0 - h * h * g(h) / 12.0;
  double f_cur = 1.0 - h * h * g(2.0 * h) / 12.0;
  double u1 = (n1 == 1) ? u_prev : (n1 == 2 ? u_cur : 0.0);
  for (int n = 3; n <= n_end; ++n) {
    const double r_next = n * h;
    const double f_next = 1.0 - h * h * g(r_next) / 12.0;
    const double u_next = ((12.0 - 10.0 * f_cur) * u_cur - f_prev * u_prev) / f_next;
    u_prev = u_cur;
    u_cur = u_next;
    f_prev = f_cur;
    f_cur = f_next;
    if (n == n1) u1 = u_cur;
    if (std::abs(u_cur) > 1e200) {
      u_prev *= 1e-200;
      u_cur *= 1e-200;
      u1 *= 1e-200;
    }
  }
  return {u1, u_cur};
}

}  // namespace

int auto_l_max(const PotentialModel& V, double k) {
  const double r_eff = V.kind == PotentialModel::Kind::zero ? 0.0 : 5.0 * V.a;
  return static_cast<int>(std::ceil(k * r_eff)) + 8;
}

bool has_bound_state(const PotentialModel& V) {
  if (V.kind == PotentialModel::Kind::zero || V.v0 >= 0.0) return false;
  const double h = V.a / 200.0;
  const double r_end = std::max(V.range(1e-12), 10.0 * V.a);
  const int n_end = static_cast<int>(std::ceil(r_end / h));
  // Zero energy, l = 0: u'' = 2V u.
  double u_prev = h, u_cur = 2.0 * h;
  auto g = [&](double r) { return 2.0 * V.at_radius(r); };
  double f_prev = 1.0 - h * h * g(h) / 12.0;
  double f_cur = 1.0 - h * h * g(2.0 * h) / 12.0;
  int nodes = 0;
  for (int n = 3; n <= n_end; ++n) {
    const double f_next = 1.0 - h * h * g(n * h) / 12.0;
    const double u_next = ((12.0 - 10.0 * f_cur) * u_cur - f_prev * u_prev) / f_next;
    if ((u_next < 0.0) != (u_cur < 0.0)) ++nodes;
    u_prev = u_cur;
    u_cur = u_next;
    f_prev = f_cur;
    f_cur = f_next;
  }
  // Beyond the potential u is linear; a node at finite r remains if it
  // heads toward zero.
  const double du = (u_cur - u_prev) / h;
  if (u_cur * du < 0.0) ++nodes;
  return nodes > 0;
}

PhaseShiftTable phase_shifts(const PotentialModel& V, double k, const PhaseShiftOptions& opts) {
  require(k > 0.0 && std::isfinite(k), "phase_shifts: k must be positive");
  if (opts.check_bound_states && has_bound_state(V)) {
    std::ostringstream msg;
    msg << "bound state detected for v0 = " << V.v0 << ", a = " << V.a;
    fail(ErrorKind::physics_precondition, msg.str());
  }
  PhaseShiftTable t;
  t.k = k;
  t.l_max = opts.l_max >= 0 ? opts.l_max : auto_l_max(V, k);
  t.step = opts.step > 0.0 ? opts.step : default_step(V, k);
  const double h = t.step;
  const double r1 = std::max(V.range(1e-12), 2.0 / k);
  const int n1 = static_cast<int>(std::ceil(r1 / h));
  const int n2 = n1 + std::max(3, static_cast<int>(std::ceil(0.5 * M_PI / k / h)));
  t.r_match = n1 * h;
  const double ra = n1 * h, rb = n2 * h;
  auto g = [&](double r) { return 2.0 * V.at_radius(r) - k * k; };
  const double g0 = g(0.0);
  t.delta.assign(t.l_max + 1, 0.0);
  if (V.kind == PotentialModel::Kind::zero) return t;
  for (int l = 0; l <= t.l_max; ++l) {
    const auto [ua, ub] = numerov(l, g, g0, h, n1, n2);
    const double K = ua / ub;
    const double ja = k * ra * std::sph_bessel(l, k * ra), jb = k * rb * std::sph_bessel(l, k * rb);
    const double ya = k * ra * std::sph_neumann(l, k * ra), yb = k * rb * std::sph_neumann(l, k * rb);
    t.delta[l] = std::atan((K * jb - ja) / (K * yb - ya));
  }
  return t;
}

std::vector<double> legendre(int l_max, double x) {
  std::vector<double> p(l_max + 1);
  p[0] = 1.0;
  if (l_max >= 1) p[1] = x;
  for (int l = 1; l < l_max; ++l) p[l + 1] = ((2.0 * l + 1.0) * x * p[l] - l * p[l - 1]) / (l + 1.0);
  return p;
}

cplx partial_wave_amplitude(const PhaseShiftTable& t, double theta) {
  const std::vector<double> p = legendre(t.l_max, std::cos(theta));
  cplx f(0.0);
  for (int l = 0; l <= t.l_max; ++l) {
    f += (2.0 * l + 1.0) * std::polar(std::sin(t.delta[l]), t.delta[l]) * p[l];
  }
  return f / t.k;
}

AmplitudeTable amplitude(const PhaseShiftTable& t, const std::vector<double>& theta) {
  AmplitudeTable a;
  a.k = t.k;
  a.theta = theta;
  for (double th : theta) {
    const cplx f = partial_wave_amplitude(t, th);
    a.f.push_back(f);
    a.sigma_diff.push_back(std::norm(f));
    a.t_abs.push_back(std::abs(f) / (4.0 * M_PI * M_PI));
  }
  return a;
}

double optical_theorem_residual(const PhaseShiftTable& t) {
  const double im_f0 = partial_wave_amplitude(t, 0.0).imag();
  const int n = 2 * t.l_max + 4;
  GlTable tab = gl_table(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double c = 0.0, w = 0.0;
    gsl_integration_glfixed_point(-1.0, 1.0, i, &c, &w, tab.get());
    total += w * std::norm(partial_wave_amplitude(t, std::acos(c)));
  }
  total *= 2.0 * M_PI;
  if (im_f0 == 0.0) return total == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(im_f0 - t.k / (4.0 * M_PI) * total) / std::abs(im_f0);
}

cplx born_tmatrix(const PotentialModel& V, const Vec3& k_out, const Vec3& k_in) {
  const double ko = norm(k_out), ki = norm(k_in);
  if (std::abs(ko - ki) > 1e-10 * std::max(1.0, ki)) {
    fail(ErrorKind::invalid_argument, "born_tmatrix: k_out and k_in must be on shell");
  }
  if (V.kind == PotentialModel::Kind::zero) return 0.0;
  const double q2 = norm2(k_out - k_in);
  const double a = V.a;
  // (2pi)^{-3} v0 (2 pi a^2)^{3/2} exp(-q^2 a^2 / 2)
  return V.v0 * std::pow(2.0 * M_PI, -1.5) * a * a * a * std::exp(-0.5 * q2 * a * a);
}

cplx born_amplitude(const PotentialModel& V, const Vec3& k_out, const Vec3& k_in) {
  return -4.0 * M_PI * M_PI * born_tmatrix(V, k_out, k_in);
}

std::vector<double> integrate_over_bins(const std::function<double(double)>& sigma_diff,
                                        const DetectorSpec& det) {
  const int n = 64;
  GlTable tab = gl_table(n);
  std::vector<double> out;
  for (const DetectorBin& b : det.bins) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double c = 0.0, w = 0.0;
      gsl_integration_glfixed_point(std::cos(b.theta_hi), std::cos(b.theta_lo), i, &c, &w, tab.get());
      s += w * sigma_diff(std::acos(c));
    }
    out.push_back(s * (b.phi_hi - b.phi_lo));
  }
  return out;
}

std::vector<double> sigma_diff_prediction(const PotentialModel& V, double k0,
                                          const DetectorSpec& det, Oracle oracle) {
  if (oracle == Oracle::born) {
    const Vec3 kin{0.0, 0.0, k0};
    return integrate_over_bins(
        [&](double th) {
          const Vec3 kout{k0 * std::sin(th), 0.0, k0 * std::cos(th)};
          return std::norm(born_amplitude(V, kout, kin));
        },
        det);
  }
  const PhaseShiftTable t = phase_shifts(V, k0);
  return integrate_over_bins([&](double th) { return std::norm(partial_wave_amplitude(t, th)); },
                             det);
}

}  // namespace bohmscat
