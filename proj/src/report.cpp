#include "bohmscat/report.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bohmscat/error.hpp"

namespace bohmscat {

using nlohmann::json;

namespace {

constexpr double kDeg = 180.0 / M_PI;

// JSON has no NaN; keep the value readable instead of silently nulling it.
json num(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

json mean_se(const MeanSE& m) { return {{"mean", num(m.mean)}, {"se", num(m.se)}}; }

json fast_json(const std::vector<FastBinReport>& rows) {
  json a = json::array();
  for (const FastBinReport& r : rows) {
    a.push_back({{"bin", r.bin},
                 {"scored", r.scored},
                 {"signed_flux", num(r.signed_flux)},
                 {"absolute_flux", num(r.absolute_flux)},
                 {"flux_error", num(r.flux_error)},
                 {"cone_integral", num(r.cone_integral)},
                 {"rel_diff", num(r.rel_diff)},
                 {"outwardness", num(r.outwardness)}});
  }
  return a;
}

json node_json(const ExperimentConfig& cfg, const NodeResult& n) {
  json j;
  j["index"] = n.job.index;
  j["impact_r"] = num(n.job.r);
  j["weight"] = num(n.job.weight);
  j["trajectories"] = n.trajectories;
  j["status"] = {{"exited", n.exited}, {"active_end", n.active_end}, {"stalled", n.stalled}, {"escaped_grid", n.escaped}};
  j["max_subdivision"] = n.max_subdivision;
  j["continuity_residual_max"] = num(n.continuity_max);
  j["peak_density0"] = num(n.peak_density0);
  j["boundary_leakage_max"] = num(n.leakage_max);
  j["norm_drift"] = num(n.norm_drift);
  j["window_end"] = num(n.window_end);
  j["window_reason"] = n.window_reason;
  json eq = json::array();
  for (const TimedEquivariance& e : n.equivariance) {
    eq.push_back({{"t", num(e.t)},
                  {"chi2", num(e.result.chi2)},
                  {"dof", e.result.dof},
                  {"p_value", num(e.result.p_value)},
                  {"min_expected", num(e.result.min_expected)},
                  {"not_active", e.not_active}});
  }
  j["equivariance"] = eq;
  json radii = json::array();
  for (std::size_t r = 0; r < n.radii.size(); ++r) {
    const RadiusResult& rr = n.radii[r];
    const CrossingSummary s = summarize(rr.tally);
    json bins = json::array();
    for (std::size_t b = 0; b < s.n_sig.size(); ++b) {
      bins.push_back({{"bin", b},
                      {"n_sig", mean_se(s.n_sig[b])},
                      {"n_tot", mean_se(s.n_tot[b])},
                      {"n_det", mean_se(s.n_det[b])},
                      {"signed_flux", num(rr.flux.signed_flux[b])},
                      {"absolute_flux", num(rr.flux.absolute_flux[b])},
                      {"flux_error", num(rr.flux.error[b])}});
    }
    json rj{{"radius", num(rr.radius)},
            {"inside_end", num(rr.inside_end)},
            {"flux_truncated", rr.flux.truncated},
            {"flux_window", {num(rr.flux.t_start), num(rr.flux.t_end)}},
            {"signed_flux_total", num(rr.flux.signed_total())},
            {"full_n_sig", mean_se(s.full_n_sig)},
            {"full_n_minus", mean_se(s.full_n_minus)},
            {"full_n_det", mean_se(s.full_n_det)},
            {"grazing", s.grazing},
            {"undetected_active", rr.tally.undetected_active},
            {"bins", bins}};
    if (!n.cone.empty()) rj["fast"] = fast_json(fast_report(cfg, n, r));
    radii.push_back(rj);
  }
  j["radii"] = radii;
  return j;
}

json rows_json(const std::vector<BinRow>& rows) {
  json a = json::array();
  for (const BinRow& r : rows) {
    a.push_back({{"bin", r.bin},
                 {"theta_lo_deg", num(r.geometry.theta_lo * kDeg)},
                 {"theta_hi_deg", num(r.geometry.theta_hi * kDeg)},
                 {"phi_lo_deg", num(r.geometry.phi_lo * kDeg)},
                 {"phi_hi_deg", num(r.geometry.phi_hi * kDeg)},
                 {"scored", r.geometry.scored},
                 {"sigma_emp", num(r.sigma_emp)},
                 {"sigma_emp_se", num(r.sigma_emp_se)},
                 {"sigma_pw", num(r.sigma_pw)},
                 {"sigma_born", num(r.sigma_born)},
                 {"ratio_emp_pw", num(r.ratio_emp_pw)}});
  }
  return a;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string provenance_line(const ExperimentConfig& cfg) {
  return "# bohmscat config_hash=" + hash_hex(config_hash(cfg)) + " seed=" + std::to_string(cfg.sampling.seed) + "\n";
}

std::string sigma_csv(const ExperimentReport& rep) {
  std::ostringstream os;
  os << provenance_line(rep.config);
  os << "bin_id,theta_lo_deg,theta_hi_deg,phi_lo_deg,phi_hi_deg,sigma_emp,sigma_emp_se,sigma_pw,sigma_born,ratio_emp_pw\n";
  for (const BinRow& r : rep.rows.at(rep.score_index())) {
    os << r.bin << ',' << format_double(r.geometry.theta_lo * kDeg) << ','
       << format_double(r.geometry.theta_hi * kDeg) << ',' << format_double(r.geometry.phi_lo * kDeg) << ','
       << format_double(r.geometry.phi_hi * kDeg) << ',' << format_double(r.sigma_emp) << ','
       << format_double(r.sigma_emp_se) << ',' << format_double(r.sigma_pw) << ','
       << format_double(r.sigma_born) << ',' << format_double(r.ratio_emp_pw) << '\n';
  }
  return os.str();
}

std::vector<FastBinReport> fast_report(const ExperimentConfig& cfg, const NodeResult& y0,
                                       std::size_t radius_index) {
  require(!y0.cone.empty(), "fast_report: node carries no cone integrals");
  const RadiusResult& rr = y0.radii.at(radius_index);
  return fast_check(rr.flux, y0.cone, cfg.detector_at(rr.radius));
}

std::string flux_csv(const ExperimentConfig& cfg, const NodeResult& y0, std::size_t radius_index) {
  const DetectorSpec det = cfg.detector_at(y0.radii.at(radius_index).radius);
  const std::vector<FastBinReport> fast = fast_report(cfg, y0, radius_index);
  std::ostringstream os;
  os << provenance_line(cfg);
  os << "bin_id,theta_lo,theta_hi,phi_lo,phi_hi,signed_flux,abs_flux,cone_integral,rel_diff\n";
  for (std::size_t b = 0; b < det.size(); ++b) {
    const DetectorBin& g = det.bins[b];
    const FastBinReport& f = fast[b];
    os << b << ',' << format_double(g.theta_lo * kDeg) << ',' << format_double(g.theta_hi * kDeg) << ','
       << format_double(g.phi_lo * kDeg) << ',' << format_double(g.phi_hi * kDeg) << ','
       << format_double(f.signed_flux) << ',' << format_double(f.absolute_flux) << ','
       << format_double(f.cone_integral) << ',' << format_double(f.rel_diff) << '\n';
  }
  return os.str();
}

std::string report_json(const ExperimentReport& rep) {
  const ExperimentConfig& cfg = rep.config;
  json j;
  j["version"] = rep.version;
  j["config_hash"] = rep.config_hash;
  j["seed"] = cfg.sampling.seed;
  j["config"] = json::parse(canonical_json(cfg));
  json quad = json::array();
  for (const ImpactNode& q : rep.quadrature) quad.push_back({{"r", num(q.r)}, {"weight", num(q.weight)}});
  j["quadrature"] = quad;
  json ps = json::array();
  for (double d : rep.phase_shifts.delta) ps.push_back(num(d));
  j["oracle"] = {{"k", num(rep.phase_shifts.k)},
                 {"l_max", rep.phase_shifts.l_max},
                 {"phase_shifts", ps},
                 {"optical_theorem_residual", num(rep.optical_residual)}};
  json per_radius = json::array();
  for (std::size_t r = 0; r < rep.rows.size(); ++r) {
    json outer = json::array();
    for (double x : rep.sigma[r].outer_node) outer.push_back(num(x));
    per_radius.push_back({{"radius", num(cfg.detector.radii[r])}, {"bins", rows_json(rep.rows[r])}, {"outer_node_contribution", outer}});
  }
  j["sigma"] = per_radius;
  j["score_radius"] = num(cfg.detector.score_radius);
  j["gates"] = {{"passed", rep.gates.passed}, {"bins_checked", rep.gates.bins_checked}, {"failures", rep.gates.failures}};
  json nodes = json::array();
  for (const NodeResult& n : rep.nodes) nodes.push_back(node_json(cfg, n));
  j["nodes"] = nodes;
  if (rep.y0) j["y0_node"] = node_json(cfg, *rep.y0);
  return j.dump(1) + "\n";
}

std::string oracle_csv(const ExperimentConfig& cfg) {
  const PotentialModel V = cfg.potential_model();
  const PhaseShiftTable t = phase_shifts(V, cfg.packet.k0);
  std::vector<double> theta;
  for (int d = 0; d <= 180; ++d) theta.push_back(d / kDeg);
  const AmplitudeTable a = amplitude(t, theta);
  std::ostringstream os;
  os << provenance_line(cfg);
  os << "theta_deg,re_f,im_f,sigma_diff\n";
  for (std::size_t i = 0; i < theta.size(); ++i) {
    os << i << ',' << format_double(a.f[i].real()) << ',' << format_double(a.f[i].imag()) << ','
       << format_double(a.sigma_diff[i]) << '\n';
  }
  return os.str();
}

std::string scaling_csv(const ExperimentConfig& base, const ScalingTable& table) {
  std::ostringstream os;
  os << provenance_line(base);
  os << "epsilon,radius,bin_id,sigma_emp,sigma_emp_se,sigma_pw,distance,n_minus\n";
  for (const ScalingRow& r : table.rows) {
    os << format_double(r.epsilon) << ',' << format_double(r.radius) << ',' << r.bin << ','
       << format_double(r.sigma_emp) << ',' << format_double(r.sigma_emp_se) << ','
       << format_double(r.sigma_pw) << ',' << format_double(r.distance) << ',' << format_double(r.n_minus)
       << '\n';
  }
  os << "# monotone_fraction=" << format_double(table.monotone_fraction)
     << " gap_decreasing=" << (table.gap_decreasing ? "true" : "false") << '\n';
  return os.str();
}

std::string lln_csv(const ExperimentConfig& cfg, const LlnTable& table) {
  std::ostringstream os;
  os << provenance_line(cfg);
  os << "tau,mean_rate,rms_deviation,mean_count,count_se\n";
  for (const LlnRow& r : table.rows) {
    os << format_double(r.tau) << ',' << format_double(r.mean_rate) << ',' << format_double(r.rms_deviation)
       << ',' << format_double(r.mean_count) << ',' << format_double(r.count_se) << '\n';
  }
  os << "# gamma_hat=" << format_double(table.gamma_hat)
     << " fitted_exponent=" << format_double(table.fitted_exponent) << '\n';
  return os.str();
}

std::string paths_csv(const ExperimentConfig& cfg, const std::vector<NodeResult>& nodes) {
  std::ostringstream os;
  os << provenance_line(cfg);
  os << "node,trajectory,t,x1,x2,x3\n";
  for (const NodeResult& n : nodes) {
    for (std::size_t i = 0; i < n.path_rows.size(); ++i) {
      const PathPoint& p = n.path_rows[i];
      os << n.job.index << ',' << n.path_ids[i] << ',' << format_double(p.t) << ',' << format_double(p.x.x)
         << ',' << format_double(p.x.y) << ',' << format_double(p.x.z) << '\n';
    }
  }
  return os.str();
}

DetectionProfile profile_from_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    const ExperimentConfig cfg = parse_config(j.at("config").dump());
    const double score = cfg.detector.score_radius;
    const DetectorSpec det = cfg.detector_at(score);
    std::vector<double> r, p;
    for (const json& n : j.at("nodes")) {
      for (const json& rr : n.at("radii")) {
        if (rr.at("radius").get<double>() != score) continue;
        double sum = 0.0;
        for (const json& b : rr.at("bins")) {
          if (det.bins.at(b.at("bin").get<std::size_t>()).scored) sum += b.at("n_det").at("mean").get<double>();
        }
        r.push_back(n.at("impact_r").get<double>());
        p.push_back(sum);
      }
    }
    return DetectionProfile(std::move(r), std::move(p), cfg.d_cut());
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("report.json unreadable: ") + e.what());
  }
}

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path p = std::filesystem::path(dir) / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_argument, "cannot write " + p.string());
  f << text;
}

void write_report(const ExperimentReport& rep, const std::string& dir) {
  write_text(dir, "report.json", report_json(rep));
  write_text(dir, "sigma.csv", sigma_csv(rep));
  if (rep.y0) write_text(dir, "flux.csv", flux_csv(rep.config, *rep.y0, rep.score_index()));
  bool any_paths = false;
  for (const NodeResult& n : rep.nodes) any_paths = any_paths || !n.path_rows.empty();
  if (any_paths) write_text(dir, "paths.csv", paths_csv(rep.config, rep.nodes));
}

void write_failed_marker(const std::string& dir, const std::string& message) {
  write_text(dir, "FAILED", message + "\n");
}

}  // namespace bohmscat
