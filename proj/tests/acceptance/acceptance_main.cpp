// Acceptance suite: one PASS/FAIL line per criterion. Every tolerance used in
// a verdict is a named constant below.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "bohmscat/error.hpp"
#include "bohmscat/experiment.hpp"
#include "bohmscat/report.hpp"

using namespace bohmscat;

namespace {

// C1
constexpr double kC1RatioTolFull = 0.15;
constexpr double kC1RatioTolSmoke = 0.25;
constexpr double kC1SeMultiple = 3.0;
constexpr double kC1MinFraction = 0.05;
// C2
constexpr double kC2CombinedErrors = 3.0;
constexpr double kC2PassFraction = 0.95;
// C3
constexpr double kC3RelDiff = 0.05;
// C4
constexpr double kC4MaxNMinus = 0.02;
// C5
constexpr int kC5Trajectories = 10000;
constexpr int kC5Cells = 4;
constexpr double kC5MinP = 0.01;
// C6
constexpr int kC6Trajectories = 100;
constexpr double kC6FlowTol = 1e-4;   // times sigma_t
constexpr double kC6FieldTol = 1e-6;  // max-norm
constexpr double kC6Time = 5.0;
constexpr double kC6Dt = 0.05;
// C7
constexpr double kC7ExpLo = -0.6;
constexpr double kC7ExpHi = -0.4;
// C8
constexpr double kC8V0 = 0.1;
constexpr double kC8AmpTol = 0.05;
constexpr double kC8OpticalTol = 1e-3;
// C9
constexpr double kC9SeMultiple = 3.0;
// C10
constexpr int kC10Workers = 8;

struct Profile {
  std::string name;
  ExperimentConfig main;
  ExperimentConfig null;
  double c1_ratio_tol = 0.0;
  int c6_n = 0;
  double c6_extent = 0.0;
  double c6_k0 = 0.0;
  double c6_start = 0.0;
  std::vector<double> c5_times;
  // C5 runs on the main config with this many sites per axis.
  int c5_n = 0;
};

Profile make_profile(const std::string& name, const std::string& configs) {
  Profile p;
  p.name = name;
  if (name == "full") {
    p.main = load_config(configs + "/acceptance.json");
    p.null = load_config(configs + "/null.json");
    p.c1_ratio_tol = kC1RatioTolFull;
    p.c6_n = 96;
    p.c6_extent = 48.0;
    p.c6_k0 = 2.0;
    p.c6_start = -5.0;
    p.c5_times = {2.0, 4.0, 6.0};
    p.c5_n = p.main.grid.n;
  } else if (name == "smoke") {
    p.main = load_config(configs + "/smoke.json");
    p.null = p.main;
    p.null.potential.kind = "zero";
    p.c1_ratio_tol = kC1RatioTolSmoke;
    p.c6_n = 64;
    p.c6_extent = 40.0;
    p.c6_k0 = 1.0;
    p.c6_start = -2.5;
    p.c5_times = {1.0, 2.0, 3.0};
    // One site per unit length under-resolves a width-1 packet for a 10^4-sample chi-square.
    p.c5_n = 64;
  } else {
    fail(ErrorKind::invalid_argument, "unknown profile " + name);
  }
  return p;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

// Index of a radius in the config's list.
std::size_t radius_index(const ExperimentConfig& c, double R) {
  for (std::size_t i = 0; i < c.detector.radii.size(); ++i)
    if (c.detector.radii[i] == R) return i;
  fail(ErrorKind::invalid_argument, "radius not configured");
}

Verdict c1(const ExperimentReport& r, double ratio_tol) {
  const auto& rows = r.rows[r.score_index()];
  double max_pw = 0.0;
  for (const BinRow& b : rows)
    if (b.geometry.scored) max_pw = std::max(max_pw, b.sigma_pw);
  int checked = 0, passed = 0;
  std::ostringstream os;
  for (const BinRow& b : rows) {
    if (!b.geometry.scored || b.sigma_pw <= kC1MinFraction * max_pw) continue;
    ++checked;
    const bool ok = std::abs(b.ratio_emp_pw - 1.0) <= ratio_tol &&
                    std::abs(b.sigma_emp - b.sigma_pw) <= kC1SeMultiple * b.sigma_emp_se;
    passed += ok;
    os << " [" << fmt(b.geometry.theta_lo * 180 / M_PI, 3) << "-" << fmt(b.geometry.theta_hi * 180 / M_PI, 3)
       << "] ratio " << fmt(b.ratio_emp_pw, 3) << " (" << fmt(b.sigma_emp, 3) << "+-" << fmt(b.sigma_emp_se, 2)
       << " vs " << fmt(b.sigma_pw, 3) << ")";
  }
  return {checked > 0 && passed == checked,
          std::to_string(passed) + "/" + std::to_string(checked) + " bins within " + fmt(ratio_tol) + " and " +
              fmt(kC1SeMultiple) + " SE at R=" + fmt(r.config.detector.score_radius) + ";" + os.str()};
}

Verdict c2(const ExperimentReport& r) {
  const NodeResult& y0 = r.y0.value();
  std::ostringstream os;
  bool all_radii = true;
  Verdict v;
  for (std::size_t ri = 0; ri < y0.radii.size(); ++ri) {
    const RadiusResult& rr = y0.radii[ri];
    const CrossingSummary s = summarize(rr.tally);
    int ok = 0;
    double worst = 0.0;
    const double n = static_cast<double>(s.count);
    for (std::size_t b = 0; b < s.n_sig.size(); ++b) {
      // A bin with no crossings has sample SE 0; floor it at the binomial SE
      // implied by the flux being tested.
      const double p = std::clamp(std::abs(rr.flux.signed_flux[b]), 0.5 / n, 1.0 - 0.5 / n);
      const double se = std::max(s.n_sig[b].se, std::sqrt(p * (1.0 - p) / n));
      const double comb = std::hypot(se, rr.flux.error[b]);
      const double dev = std::abs(s.n_sig[b].mean - rr.flux.signed_flux[b]);
      if (dev <= kC2CombinedErrors * comb) ++ok;
      if (comb > 0) worst = std::max(worst, dev / comb);
    }
    const double frac = static_cast<double>(ok) / s.n_sig.size();
    const bool pass = frac >= kC2PassFraction;
    if (rr.radius == r.config.detector.score_radius) v.pass = pass;
    all_radii = all_radii && pass;
    os << " R=" << fmt(rr.radius) << ": " << ok << "/" << s.n_sig.size() << " (worst " << fmt(worst, 3) << " sigma)";
  }
  v.detail = "n_sig vs signed flux within " + fmt(kC2CombinedErrors) + " combined errors, y=0 field;" + os.str() +
             (all_radii ? "" : "; not every radius passes");
  return v;
}

Verdict c3(const ExperimentReport& r) {
  const ExperimentConfig& c = r.config;
  const NodeResult& y0 = r.y0.value();
  const std::size_t si = r.score_index();
  const double r_max = *std::max_element(c.detector.radii.begin(), c.detector.radii.end());
  const std::size_t mi = radius_index(c, r_max);
  const auto a = fast_report(c, y0, si), b = fast_report(c, y0, mi);
  bool within = true, improving = true;
  std::ostringstream os;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].scored) continue;
    within = within && a[k].rel_diff < kC3RelDiff;
    const double noise = (a[k].flux_error + b[k].flux_error) / std::max(a[k].cone_integral, 1e-300);
    improving = improving && b[k].rel_diff <= a[k].rel_diff + noise;
    os << " " << k << ":" << fmt(a[k].rel_diff, 2) << "->" << fmt(b[k].rel_diff, 2);
  }
  return {within && improving, "rel diff per scored bin R=" + fmt(c.detector.score_radius) + "->" + fmt(r_max) +
                                   (within ? "" : " (above " + fmt(kC3RelDiff) + ")") +
                                   (improving ? "" : " (not improving)") + ";" + os.str()};
}

Verdict c4(const ExperimentReport& r) {
  const ExperimentConfig& c = r.config;
  const NodeResult& y0 = r.y0.value();
  std::vector<std::pair<double, double>> gap;
  for (const RadiusResult& rr : y0.radii) {
    if (rr.radius > c.detector.score_radius) continue;
    gap.push_back({rr.radius, summarize(rr.tally).full_n_minus.mean});
  }
  std::sort(gap.begin(), gap.end());
  bool decreasing = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < gap.size(); ++i) {
    if (i > 0 && gap[i].second > gap[i - 1].second) decreasing = false;
    os << " R=" << fmt(gap[i].first) << ":" << fmt(gap[i].second, 3);
  }
  const bool small = !gap.empty() && gap.back().second < kC4MaxNMinus;
  return {small && decreasing, "full-sphere mean n_minus" + os.str() + (small ? "" : " (above limit)") +
                                   (decreasing ? "" : " (increases with R)")};
}

Verdict c5(const Profile& p) {
  std::ostringstream os;
  bool pass = true;
  for (const char* kind : {"zero", "acceptance"}) {
    ExperimentConfig c = p.main;
    if (std::string(kind) == "zero") c.potential.kind = "zero";
    c.grid.n = p.c5_n;
    c.evolution.check_times = p.c5_times;
    c.evolution.t_max = p.c5_times.back();
    NodeJob job;
    job.index = 1 << 20;
    job.trajectories = kC5Trajectories;
    const NodeResult n = run_node(c, job);
    os << " " << kind << ":";
    for (const TimedEquivariance& e : n.equivariance) {
      pass = pass && e.result.dof == kC5Cells * kC5Cells * kC5Cells && e.result.p_value > kC5MinP;
      os << " t=" << fmt(e.t, 3) << " p=" << fmt(e.result.p_value, 3);
    }
    pass = pass && n.equivariance.size() == p.c5_times.size();
  }
  return {pass, std::to_string(kC5Trajectories) + " endpoints, " + std::to_string(kC5Cells) + "^3 cells, " +
                    std::to_string(p.c5_n) + "^3 grid;" + os.str()};
}

Verdict c6(const Profile& p) {
  const GridSpec g = build_grid(p.c6_n, p.c6_extent);
  PacketSpec s;
  s.sigma = p.main.packet.sigma;
  s.epsilon = 0.5;
  s.k0 = {0.0, 0.0, p.c6_k0};
  s.center = {0.0, 0.0, p.c6_start};
  Propagator prop(g, PotentialModel::zero());
  Snapshot s0, sh, s1;
  prop.snapshot(gaussian_packet(s, g).values, 0.0, s0);
  prepare_spectrum(s0, prop.fft());
  std::mt19937_64 rng(7);
  std::vector<Trajectory> trajs;
  for (int i = 0; i < kC6Trajectories; ++i) trajs.push_back(make_trajectory(sample_initial_position(s, rng), 0.0));
  TrajectoryOptions opt;
  opt.mode = Interpolation::spectral;
  const long steps = std::lround(kC6Time / kC6Dt);
  for (long n = 0; n < steps; ++n) {
    prop.step(s0, 0.5 * kC6Dt, sh);
    prop.step(sh, 0.5 * kC6Dt, s1);
    sh.time = (n + 0.5) * kC6Dt;
    s1.time = (n + 1) * kC6Dt;
    prepare_spectrum(sh, prop.fft());
    prepare_spectrum(s1, prop.fft());
    advance_trajectories(s0, sh, s1, g, trajs, opt, nullptr, n);
    std::swap(s0, s1);
  }
  const FreeGaussian exact = free_evolve_analytic(s, kC6Time);
  double flow_err = 0.0;
  for (const Trajectory& t : trajs) flow_err = std::max(flow_err, norm(t.cur.x - exact.flow(t.q0)));
  const ComplexField f = exact.sample(g);
  double field_err = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) field_err = std::max(field_err, std::abs(f.values[i] - s0.psi[i]));
  const double rel = flow_err / exact.width();
  return {rel < kC6FlowTol && field_err < kC6FieldTol,
          "max endpoint error " + fmt(rel, 3) + " sigma_t (limit " + fmt(kC6FlowTol) + "), field max-norm " +
              fmt(field_err, 3) + " (limit " + fmt(kC6FieldTol) + ") at t=" + fmt(kC6Time) + " on " +
              std::to_string(p.c6_n) + "^3"};
}

Verdict c7(const ExperimentReport& r, LlnTable& table) {
  table = lln_run(r.config.beam_config(), detection_profile(r), r.config.lln.tau, r.config.lln.repeats);
  std::ostringstream os;
  for (const LlnRow& row : table.rows) os << " tau=" << fmt(row.tau) << ":" << fmt(row.rms_deviation, 3);
  const bool ok = table.fitted_exponent >= kC7ExpLo && table.fitted_exponent <= kC7ExpHi;
  return {ok, "fitted exponent " + fmt(table.fitted_exponent, 4) + ", gamma_hat " + fmt(table.gamma_hat, 4) +
                  "; rms" + os.str()};
}

// Largest |4 pi^2 |T_B| / |f| - 1| on a 1-degree grid over [20, 160], and the
// last angle up to which every point is within tolerance.
std::pair<double, int> born_deviation(double v0, double a, double k) {
  const PotentialModel V = PotentialModel::gaussian_well(v0, a);
  const PhaseShiftTable t = phase_shifts(V, k);
  double worst = 0.0;
  int ok_until = 19;
  for (int deg = 20; deg <= 160; ++deg) {
    const double th = deg * M_PI / 180.0;
    const double pw = std::abs(partial_wave_amplitude(t, th));
    const double born =
        4.0 * M_PI * M_PI * std::abs(born_tmatrix(V, {k * std::sin(th), 0.0, k * std::cos(th)}, {0.0, 0.0, k}));
    const double d = std::abs(born / pw - 1.0);
    worst = std::max(worst, d);
    if (worst <= kC8AmpTol) ok_until = deg;
  }
  return {worst, ok_until};
}

Verdict c8(const ExperimentConfig& main) {
  const double k = main.packet.k0, a = main.potential.a;
  const auto [worst, ok_until] = born_deviation(kC8V0, a, k);
  // Second Born scaling: the deviation shrinks in proportion to v0.
  const double weaker = born_deviation(0.1 * kC8V0, a, k).first;
  const double opt_weak = optical_theorem_residual(phase_shifts(PotentialModel::gaussian_well(kC8V0, a), k));
  const double opt_main = optical_theorem_residual(phase_shifts(main.potential_model(), k));
  return {worst <= kC8AmpTol && opt_weak < kC8OpticalTol && opt_main < kC8OpticalTol,
          "max |4pi^2|T_B|/|f| - 1| = " + fmt(worst, 3) + " at v0=" + fmt(kC8V0) + ", k=" + fmt(k) +
              " (within " + fmt(kC8AmpTol) + " up to " + std::to_string(ok_until) + " deg; " + fmt(weaker, 3) +
              " at v0=" + fmt(0.1 * kC8V0) + "); optical residual " + fmt(opt_weak, 3) + " (v0=" + fmt(kC8V0) +
              "), " + fmt(opt_main, 3) + " (v0=" + fmt(main.potential.v0) + ")"};
}

Verdict c9(const ExperimentReport& r) {
  int ok = 0, n = 0;
  std::ostringstream os;
  for (const BinRow& b : r.rows[r.score_index()]) {
    if (!b.geometry.scored) continue;
    ++n;
    const double z = b.sigma_emp / b.sigma_emp_se;
    ok += std::abs(b.sigma_emp) <= kC9SeMultiple * b.sigma_emp_se;
    os << " " << b.bin << ":" << fmt(b.sigma_emp, 3) << "(" << fmt(z, 3) << " SE)";
  }
  return {ok == n, std::to_string(ok) + "/" + std::to_string(n) + " scored bins within " + fmt(kC9SeMultiple) +
                       " SE of 0 with V=0;" + os.str()};
}

Verdict c10(const ExperimentConfig& smoke) {
  const ExperimentReport a = run_experiment(smoke, 1);
  const ExperimentReport b = run_experiment(smoke, 1);
  const ExperimentReport p = run_experiment(smoke, kC10Workers);
  const bool same = sigma_csv(a) == sigma_csv(b) && report_json(a) == report_json(b);
  const bool par = sigma_csv(a) == sigma_csv(p) && report_json(a) == report_json(p);
  return {same && par, std::string("serial rerun ") + (same ? "identical" : "DIFFERS") + ", " +
                           std::to_string(kC10Workers) + " workers " + (par ? "identical" : "DIFFER") +
                           " (sigma.csv and report.json, smoke config)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string profile_name = "smoke", out = "acceptance_out", configs = BOHMSCAT_CONFIG_DIR;
  int workers = 1;
  std::vector<int> expect_red;
  std::vector<int> only;
  app.add_option("--profile", profile_name, "smoke or full");
  app.add_option("--out", out, "artifact directory");
  app.add_option("--configs", configs, "directory holding acceptance.json, null.json, smoke.json");
  app.add_option("--workers", workers, "worker threads for the experiment runs");
  app.add_option("--expect-red", expect_red, "criteria known to fail at this scale (exit status ignores them)");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const Profile p = make_profile(profile_name, configs);
  const std::string dir = out + "/" + p.name;
  const std::set<int> red(expect_red.begin(), expect_red.end());
  const std::set<int> selected(only.begin(), only.end());
  std::map<int, std::pair<std::string, Verdict>> results;
  std::set<int> errored;

  auto run = [&](int id, const std::string& title, const std::function<Verdict()>& f) {
    if (!selected.empty() && !selected.count(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      errored.insert(id);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.detail += " [" + fmt(secs, 3) + " s]";
    results[id] = {title, v};
    std::cout << "C" << id << " " << (v.pass ? "PASS" : "FAIL") << " " << title << ": " << v.detail << std::endl;
  };

  run(8, "oracle cross-validation", [&] { return c8(p.main); });
  run(10, "determinism", [&] { return c10(load_config(configs + "/smoke.json")); });
  run(6, "free-dynamics oracle", [&] { return c6(p); });
  run(5, "equivariance", [&] { return c5(p); });

  std::optional<ExperimentReport> main_report;
  const bool need_main = selected.empty() || selected.count(1) || selected.count(2) || selected.count(3) ||
                         selected.count(4) || selected.count(7);
  if (need_main) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      main_report = run_experiment(p.main, workers);
      write_report(*main_report, dir + "/main");
      write_text(dir + "/main", "oracle.csv", oracle_csv(p.main));
      std::cout << "main run finished in "
                << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 4) << " s"
                << std::endl;
    } catch (const std::exception& e) {
      std::cout << "main run failed: " << e.what() << std::endl;
    }
  }
  auto with_main = [&](const std::function<Verdict(const ExperimentReport&)>& f) {
    return [&, f] {
      if (!main_report) fail(ErrorKind::invalid_argument, "main run unavailable");
      return f(*main_report);
    };
  };
  run(1, "end-to-end cross section", with_main([&](const ExperimentReport& r) { return c1(r, p.c1_ratio_tol); }));
  run(2, "crossing/flux identity", with_main(c2));
  run(3, "flux across surfaces", with_main(c3));
  run(4, "outwardness gap", with_main(c4));
  run(7, "law of large numbers", with_main([&](const ExperimentReport& r) {
        LlnTable t;
        Verdict v = c7(r, t);
        write_text(dir + "/main", "lln.csv", lln_csv(r.config, t));
        return v;
      }));
  run(9, "null experiment", [&] {
    const ExperimentReport r = run_experiment(p.null, workers);
    write_report(r, dir + "/null");
    return c9(r);
  });

  int passed = 0, unexpected = 0;
  std::cout << "---- " << p.name << " profile summary" << std::endl;
  for (const auto& [id, tv] : results) {
    const bool known = red.count(id) > 0;
    passed += tv.second.pass;
    if (!tv.second.pass && (!known || errored.count(id))) ++unexpected;
    std::cout << "C" << id << " " << (tv.second.pass ? "PASS" : (known ? "FAIL (expected at this scale)" : "FAIL"))
              << " " << tv.first << std::endl;
  }
  std::cout << passed << "/" << results.size() << " criteria pass; " << unexpected << " unexpected failure(s)"
            << std::endl;
  return unexpected == 0 ? 0 : 1;
}
