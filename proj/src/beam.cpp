#include "bohmscat/beam.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <sstream>

#include "bohmscat/error.hpp"
#include "bohmscat/rng.hpp"

namespace bohmscat {

double minimum_d_cut(double sigma, double epsilon, double a) { return 3.0 * sigma / epsilon + 5.0 * a; }

void validate_beam(const BeamConfig& cfg, double a) {
  require(cfg.epsilon > 0.0 && cfg.epsilon <= 1.0, "beam: epsilon must lie in (0, 1]");
  require(cfg.sigma > 0.0, "beam: sigma must be positive");
  require(cfg.k0.x == 0.0 && cfg.k0.y == 0.0 && cfg.k0.z > 0.0, "beam: k0 must point along +e3");
  require(cfg.L_source > 0.0, "beam: L_source must be positive");
  require(cfg.tau >= 0.0, "beam: tau must be non-negative");
  const double dmin = minimum_d_cut(cfg.sigma, cfg.epsilon, a);
  if (cfg.D_cut < dmin - 1e-12) {
    std::ostringstream msg;
    msg << "beam: D_cut = " << cfg.D_cut << " is below 3 sigma/eps + 5a = " << dmin;
    fail(ErrorKind::invalid_argument, msg.str());
  }
}

PacketSpec packet_at(const BeamConfig& cfg, const Vec3& y) {
  PacketSpec p;
  p.sigma = cfg.sigma;
  p.k0 = cfg.k0;
  p.epsilon = cfg.epsilon;
  p.center = y;
  return p;
}

Vec3 sample_initial_position(const PacketSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, spec.position_std());
  Vec3 q;
  q.x = spec.center.x + n(rng);
  q.y = spec.center.y + n(rng);
  q.z = spec.center.z + n(rng);
  return q;
}

std::vector<EmissionEvent> sample_emissions(const BeamConfig& cfg, std::mt19937_64& rng) {
  std::vector<EmissionEvent> out;
  const double mean = M_PI * cfg.D_cut * cfg.D_cut * cfg.tau;
  if (!(mean > 0.0)) return out;
  std::poisson_distribution<long> count(mean);
  const long n = count(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    EmissionEvent e;
    e.t_emit = cfg.tau * u(rng);
    const double r = cfg.D_cut * std::sqrt(u(rng));
    const double phi = 2.0 * M_PI * u(rng);
    e.y = {r * std::cos(phi), r * std::sin(phi), -cfg.L_source};
    e.q = sample_initial_position(packet_at(cfg, e.y), rng);
    out.push_back(e);
  }
  return out;
}

std::vector<EmissionEvent> sample_emissions(const BeamConfig& cfg) {
  std::mt19937_64 rng = stream_rng(cfg.rng_seed, 0);
  return sample_emissions(cfg, rng);
}

void write_emissions_csv(std::ostream& os, const std::vector<EmissionEvent>& events) {
  os << "t_emit,y1,y2,y3,q1,q2,q3\n";
  os.precision(17);
  for (const EmissionEvent& e : events) {
    os << e.t_emit << ',' << e.y.x << ',' << e.y.y << ',' << e.y.z << ',' << e.q.x << ',' << e.q.y
       << ',' << e.q.z << '\n';
  }
}

std::vector<ImpactNode> impact_quadrature(const BeamConfig& cfg, int M) {
  if (M < 4) fail(ErrorKind::invalid_argument, "impact_quadrature: M must be >= 4");
  require(cfg.D_cut > 0.0, "impact_quadrature: D_cut must be positive");
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> tab(
      gsl_integration_glfixed_table_alloc(M), &gsl_integration_glfixed_table_free);
  std::vector<ImpactNode> nodes;
  for (int i = 0; i < M; ++i) {
    double r = 0.0, w = 0.0;
    gsl_integration_glfixed_point(0.0, cfg.D_cut, i, &r, &w, tab.get());
    nodes.push_back({r, 2.0 * M_PI * r * w});
  }
  std::sort(nodes.begin(), nodes.end(), [](const ImpactNode& a, const ImpactNode& b) { return a.r < b.r; });
  return nodes;
}

SigmaEstimate estimate_sigma(const std::vector<NodeDetection>& nodes) {
  SigmaEstimate s;
  if (nodes.empty()) return s;
  const std::size_t nb = nodes.front().p.size();
  s.sigma.assign(nb, 0.0);
  s.se.assign(nb, 0.0);
  s.outer_node.assign(nb, 0.0);
  std::size_t outer = 0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const NodeDetection& n = nodes[j];
    require(n.p.size() == nb && n.se.size() == nb, "estimate_sigma: inconsistent bin counts");
    if (n.r > nodes[outer].r) outer = j;
    for (std::size_t b = 0; b < nb; ++b) {
      s.sigma[b] += n.weight * n.p[b];
      s.se[b] += n.weight * n.weight * n.se[b] * n.se[b];
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    s.se[b] = std::sqrt(s.se[b]);
    s.outer_node[b] = nodes[outer].weight * nodes[outer].p[b];
  }
  return s;
}

DetectionProfile::DetectionProfile(std::vector<double> r, std::vector<double> p, double d_cut)
    : r_(std::move(r)), p_(std::move(p)), d_cut_(d_cut) {
  require(!r_.empty() && r_.size() == p_.size(), "DetectionProfile: need matching nodes");
  for (std::size_t i = 1; i < r_.size(); ++i) require(r_[i] > r_[i - 1], "DetectionProfile: r must increase");
  require(r_.front() >= 0.0 && r_.back() <= d_cut_, "DetectionProfile: nodes must lie in [0, D_cut]");
}

double DetectionProfile::operator()(double r) const {
  if (r <= r_.front()) return p_.front();
  if (r >= r_.back()) return p_.back();
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(r_.begin(), r_.end(), r) - r_.begin());
  const double s = (r - r_[i - 1]) / (r_[i] - r_[i - 1]);
  return p_[i - 1] + s * (p_[i] - p_[i - 1]);
}

double DetectionProfile::integral() const {
  // int 2 pi r P(r) dr, piecewise exact.
  auto flat = [](double p, double a, double b) { return M_PI * p * (b * b - a * a); };
  double s = flat(p_.front(), 0.0, r_.front()) + flat(p_.back(), r_.back(), d_cut_);
  for (std::size_t i = 1; i < r_.size(); ++i) {
    const double a = r_[i - 1], b = r_[i];
    const double m = (p_[i] - p_[i - 1]) / (b - a);
    const double c = p_[i - 1] - m * a;
    s += 2.0 * M_PI * (c * (b * b - a * a) / 2.0 + m * (b * b * b - a * a * a) / 3.0);
  }
  return s;
}

LlnTable lln_run(const BeamConfig& cfg, const DetectionProfile& profile,
                 const std::vector<double>& tau_schedule, int repeats) {
  require(repeats >= 2, "lln_run: need at least 2 repeats");
  LlnTable table;
  table.gamma_hat = profile.integral();
  const double area = M_PI * cfg.D_cut * cfg.D_cut;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t s = 0; s < tau_schedule.size(); ++s) {
    const double tau = tau_schedule[s];
    require(tau > 0.0, "lln_run: tau must be positive");
    double sum_rate = 0.0, sum_dev2 = 0.0, sum_count = 0.0, sum_count2 = 0.0;
    for (int rep = 0; rep < repeats; ++rep) {
      std::mt19937_64 rng = stream_rng(cfg.rng_seed, (s << 20) + static_cast<std::uint64_t>(rep));
      std::poisson_distribution<long> count(area * tau);
      const long n = count(rng);
      // Emission times are uniform on [0, tau) and do not affect N*(tau).
      long detected = 0;
      for (long i = 0; i < n; ++i) {
        const double r = cfg.D_cut * std::sqrt(u(rng));
        if (u(rng) < profile(r)) ++detected;
      }
      const double rate = detected / tau;
      sum_rate += rate;
      sum_dev2 += (rate - table.gamma_hat) * (rate - table.gamma_hat);
      sum_count += detected;
      sum_count2 += static_cast<double>(detected) * detected;
    }
    LlnRow row;
    row.tau = tau;
    row.mean_rate = sum_rate / repeats;
    row.rms_deviation = std::sqrt(sum_dev2 / repeats);
    row.mean_count = sum_count / repeats;
    row.count_se = std::sqrt(std::max(0.0, sum_count2 / repeats - row.mean_count * row.mean_count) /
                             (repeats - 1));
    table.rows.push_back(row);
  }
  if (table.rows.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const LlnRow& r : table.rows) {
      if (!(r.rms_deviation > 0.0)) continue;
      const double x = std::log(r.tau), y = std::log(r.rms_deviation);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++n;
    }
    if (n >= 2) table.fitted_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return table;
}

}  // namespace bohmscat
