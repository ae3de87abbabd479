#include "bohmscat/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "bohmscat/error.hpp"
#include "bohmscat/rng.hpp"

namespace bohmscat {

namespace {

// Window checks (inside probability, boundary shell) run this often.
constexpr int kWindowCheckStride = 10;

struct TrackerSink : SegmentSink {
  std::vector<std::vector<CrossingTracker>>* trackers = nullptr;

  void segment(std::size_t index, const PathPoint& a, const PathPoint& b) override {
    for (auto& per_radius : *trackers) per_radius[index].feed(a, b);
  }
};

void injection_checks(const ComplexField& psi0, const PotentialModel& V, int shell, double leak_tol) {
  const double leak = boundary_shell_probability(psi0, shell);
  if (leak > leak_tol) {
    std::ostringstream msg;
    msg << "boundary-leakage at injection: shell probability " << leak << " > " << leak_tol;
    fail(ErrorKind::physics_precondition, msg.str());
  }
  if (V.strength() > 0.0) {
    const double overlap = potential_overlap(psi0, V);
    if (overlap > 1e-6 * V.strength()) {
      std::ostringstream msg;
      msg << "packet-overlaps-potential-at-injection: overlap " << overlap << " > " << 1e-6 * V.strength();
      fail(ErrorKind::physics_precondition, msg.str());
    }
  }
}

double binomial_se(double k, double n) {
  if (n <= 1.0) return 0.0;
  // Clipped away from 0 and 1 so an empty bin still carries an uncertainty.
  const double p = std::clamp(k / n, 0.5 / n, 1.0 - 0.5 / n);
  return std::sqrt(p * (1.0 - p) / n);
}

}  // namespace

NodeResult run_node(const ExperimentConfig& cfg, const NodeJob& job) {
  const GridSpec grid = cfg.grid_spec();
  const PotentialModel V = cfg.potential_model();
  const BeamConfig beam = cfg.beam_config();
  const Interpolation mode = cfg.interpolation();
  const int shell = cfg.shell_width();
  const double dt = cfg.evolution.dt;

  NodeResult res;
  res.job = job;
  res.y = {job.r, 0.0, -beam.L_source};

  const PacketSpec spec = packet_at(beam, res.y);
  ComplexField psi0 = gaussian_packet(spec, grid);
  injection_checks(psi0, V, shell, cfg.evolution.leak_stop);

  std::vector<DetectorSpec> dets;
  for (double R : cfg.detector.radii) dets.push_back(cfg.detector_at(R));
  const double r_max = *std::max_element(cfg.detector.radii.begin(), cfg.detector.radii.end());

  Propagator prop(grid, V);
  Snapshot s0, sh, s1;
  prop.snapshot(psi0.values, 0.0, s0);
  if (mode == Interpolation::spectral) prepare_spectrum(s0, prop.fft());
  res.peak_density0 = s0.peak_density;

  std::vector<FluxAccumulator> flux;
  for (const DetectorSpec& d : dets) flux.emplace_back(d, grid);
  {
    const CurrentField j = current_density(s0);
    for (FluxAccumulator& f : flux) f.add(0.0, j);
  }

  const int n_traj = job.trajectories > 0 ? job.trajectories : cfg.sampling.trajectories;
  std::mt19937_64 rng = stream_rng(cfg.sampling.seed, static_cast<std::uint64_t>(job.index) + 1);
  std::vector<Trajectory> trajs;
  trajs.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i) trajs.push_back(make_trajectory(sample_initial_position(spec, rng), 0.0));

  std::vector<std::vector<CrossingTracker>> trackers(dets.size());
  for (std::size_t r = 0; r < dets.size(); ++r) {
    trackers[r].assign(n_traj, CrossingTracker(&dets[r]));
    for (int i = 0; i < n_traj; ++i) trackers[r][i].start(trajs[i].cur);
  }
  TrackerSink sink;
  sink.trackers = &trackers;

  TrajectoryOptions topt;
  topt.mode = mode;
  topt.c_step = cfg.evolution.c_step;
  topt.guard = shell * grid.dx;
  topt.freeze_radius = r_max + cfg.detector.freeze_margin;

  const int n_paths = std::min(cfg.diagnostics.path_dump, n_traj);
  auto dump_paths = [&](double t) {
    for (int i = 0; i < n_paths; ++i) {
      PathPoint p = trajs[i].cur;
      p.t = t;
      res.path_rows.push_back(p);
      res.path_ids.push_back(i);
    }
  };
  dump_paths(0.0);

  std::vector<double> checks = cfg.evolution.check_times;
  std::sort(checks.begin(), checks.end());
  std::size_t next_check = 0;

  const long steps = std::lround(cfg.evolution.t_max / dt);
  res.window_reason = "t_max";
  res.window_end = 0.0;
  for (long n = 0; n < steps; ++n) {
    const double t0 = n * dt;
    const double t1 = (n + 1) * dt;
    prop.step(s0, 0.5 * dt, sh);
    prop.step(sh, 0.5 * dt, s1);
    sh.time = t0 + 0.5 * dt;
    s1.time = t1;
    if (mode == Interpolation::spectral) {
      prepare_spectrum(sh, prop.fft());
      prepare_spectrum(s1, prop.fft());
    }
    advance_trajectories(s0, sh, s1, grid, trajs, topt, &sink, n);
    {
      const CurrentField jh = current_density(sh);
      for (FluxAccumulator& f : flux) f.add(sh.time, jh);
      const CurrentField j1 = current_density(s1);
      for (FluxAccumulator& f : flux) f.add(t1, j1);
    }
    if (cfg.diagnostics.continuity_stride > 0 && (n + 1) % cfg.diagnostics.continuity_stride == 0) {
      res.continuity_max = std::max(res.continuity_max, continuity_residual(s0.psi, s1.psi, dt, prop));
    }
    while (next_check < checks.size() && t1 >= checks[next_check] - 0.5 * dt) {
      TimedEquivariance te;
      te.t = t1;
      std::vector<Vec3> pos;
      pos.reserve(trajs.size());
      for (const Trajectory& tr : trajs) {
        pos.push_back(tr.cur.x);
        if (tr.status != TrajectoryStatus::active) ++te.not_active;
      }
      te.result = equivariance_test(pos, s1.psi, grid);
      res.equivariance.push_back(te);
      ++next_check;
    }
    if (n_paths > 0 && (n + 1) % cfg.evolution.store_stride == 0) dump_paths(t1);

    std::swap(s0, s1);
    res.window_end = t1;
    if ((n + 1) % kWindowCheckStride == 0 || n + 1 == steps) {
      const double leak = boundary_shell_probability(s0.psi, grid, shell);
      res.leakage_max = std::max(res.leakage_max, leak);
      if (leak > cfg.evolution.leak_stop) {
        res.window_reason = "leak_stop";
        break;
      }
      if (probability_inside(s0.psi, grid, r_max) < cfg.evolution.inside_stop) {
        res.window_reason = "inside_stop";
        break;
      }
    }
  }

  double norm2 = 0.0;
  for (const cplx& z : s0.psi) norm2 += std::norm(z);
  res.norm_drift = std::abs(std::sqrt(norm2 * grid.cell_volume()) - 1.0);

  res.trajectories = n_traj;
  for (const Trajectory& tr : trajs) {
    switch (tr.status) {
      case TrajectoryStatus::active: ++res.active_end; break;
      case TrajectoryStatus::exited: ++res.exited; break;
      case TrajectoryStatus::stalled: ++res.stalled; break;
      case TrajectoryStatus::escaped_grid: ++res.escaped; break;
    }
    res.max_subdivision = std::max(res.max_subdivision, tr.max_subdivision);
  }

  for (std::size_t r = 0; r < dets.size(); ++r) {
    RadiusResult rr;
    rr.radius = dets[r].radius;
    rr.tally = CrossingTally(dets[r].size());
    for (int i = 0; i < n_traj; ++i) {
      rr.tally.add(trackers[r][i].record(), dets[r], trajs[i].status == TrajectoryStatus::active);
    }
    rr.flux = flux[r].ledger();
    rr.inside_end = probability_inside(s0.psi, grid, rr.radius);
    rr.flux.truncated = rr.inside_end >= cfg.evolution.inside_stop || res.window_reason == "leak_stop";
    res.radii.push_back(std::move(rr));
  }

  if (job.with_cone) {
    ComplexField f(grid, res.window_end);
    f.values = s0.psi;
    const ComplexField hat = to_momentum(f, prop.fft());
    res.cone = cone_integrals(hat, dets.front());
  }
  return res;
}

std::size_t ExperimentReport::score_index() const {
  const auto& radii = config.detector.radii;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] == config.detector.score_radius) return i;
  }
  fail(ErrorKind::config_invalid, "detector.score_radius is not one of detector.radii");
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, int workers) {
  validate_config(cfg);
  const PotentialModel V = cfg.potential_model();
  if (has_bound_state(V)) {
    std::ostringstream msg;
    msg << "bound state detected for v0 = " << V.v0 << ", a = " << V.a;
    fail(ErrorKind::physics_precondition, msg.str());
  }

  ExperimentReport rep;
  rep.config = cfg;
  rep.config_hash = hash_hex(config_hash(cfg));
  const BeamConfig beam = cfg.beam_config();
  rep.quadrature = impact_quadrature(beam, cfg.sampling.M);

  std::vector<NodeJob> jobs;
  for (int j = 0; j < cfg.sampling.M; ++j) jobs.push_back({j, rep.quadrature[j].r, rep.quadrature[j].weight, false, 0});
  if (cfg.diagnostics.y0_node) jobs.push_back({cfg.sampling.M, 0.0, 0.0, true, 0});

  std::vector<NodeResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_node(cfg, jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int nw = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int j = 0; j < cfg.sampling.M; ++j) rep.nodes.push_back(std::move(results[j]));
  if (cfg.diagnostics.y0_node) rep.y0 = std::move(results.back());

  const double k0 = cfg.packet.k0;
  rep.phase_shifts = phase_shifts(V, k0);
  rep.optical_residual = V.strength() > 0.0 ? optical_theorem_residual(rep.phase_shifts) : 0.0;

  for (std::size_t r = 0; r < cfg.detector.radii.size(); ++r) {
    const DetectorSpec det = cfg.detector_at(cfg.detector.radii[r]);
    std::vector<NodeDetection> nd;
    for (const NodeResult& node : rep.nodes) {
      const CrossingTally& t = node.radii[r].tally;
      NodeDetection d;
      d.r = node.job.r;
      d.weight = node.job.weight;
      const double n = static_cast<double>(t.count);
      for (std::size_t b = 0; b < det.size(); ++b) {
        d.p.push_back(n > 0 ? t.ndet_sum[b] / n : 0.0);
        d.se.push_back(binomial_se(t.ndet_sum[b], n));
      }
      nd.push_back(std::move(d));
    }
    rep.sigma.push_back(estimate_sigma(nd));
  }

  const DetectorSpec det = cfg.detector_at(cfg.detector.score_radius);
  rep.sigma_pw = sigma_diff_prediction(V, k0, det, Oracle::partial_wave);
  rep.sigma_born = sigma_diff_prediction(V, k0, det, Oracle::born);
  for (std::size_t r = 0; r < cfg.detector.radii.size(); ++r) {
    std::vector<BinRow> rows;
    for (std::size_t b = 0; b < det.size(); ++b) {
      BinRow row;
      row.bin = static_cast<int>(b);
      row.geometry = det.bins[b];
      row.sigma_emp = rep.sigma[r].sigma[b];
      row.sigma_emp_se = rep.sigma[r].se[b];
      row.sigma_pw = rep.sigma_pw[b];
      row.sigma_born = rep.sigma_born[b];
      row.ratio_emp_pw = row.sigma_pw > 0.0 ? row.sigma_emp / row.sigma_pw : std::nan("");
      rows.push_back(row);
    }
    rep.rows.push_back(std::move(rows));
  }
  rep.gates = evaluate_gates(rep);
  return rep;
}

GateResult evaluate_gates(const ExperimentReport& rep) {
  GateResult g;
  const auto& gates = rep.config.gates;
  const std::vector<BinRow>& rows = rep.rows.at(rep.score_index());
  double max_pw = 0.0;
  for (const BinRow& r : rows) {
    if (r.geometry.scored) max_pw = std::max(max_pw, r.sigma_pw);
  }
  for (const BinRow& r : rows) {
    if (!r.geometry.scored) continue;
    std::ostringstream msg;
    msg << "bin " << r.bin << ": ";
    if (max_pw > 0.0) {
      if (r.sigma_pw <= gates.min_fraction * max_pw) continue;
      ++g.bins_checked;
      const bool ratio_ok = std::abs(r.ratio_emp_pw - 1.0) <= gates.ratio_tol;
      const bool se_ok = std::abs(r.sigma_emp - r.sigma_pw) <= gates.se_multiple * r.sigma_emp_se;
      if (!ratio_ok || !se_ok) {
        msg << "ratio " << r.ratio_emp_pw << ", |emp - pw| = " << std::abs(r.sigma_emp - r.sigma_pw)
            << " vs " << gates.se_multiple << " SE = " << gates.se_multiple * r.sigma_emp_se;
        g.failures.push_back(msg.str());
      }
    } else {
      // No scattering predicted: every scored bin must be consistent with zero.
      ++g.bins_checked;
      if (std::abs(r.sigma_emp) > gates.se_multiple * r.sigma_emp_se) {
        msg << "sigma_emp " << r.sigma_emp << " exceeds " << gates.se_multiple << " SE = "
            << gates.se_multiple * r.sigma_emp_se;
        g.failures.push_back(msg.str());
      }
    }
  }
  g.passed = g.failures.empty();
  return g;
}

ScalingTable scaling_study(const ExperimentConfig& base, const std::vector<double>& epsilon_schedule,
                           const std::vector<double>& R_schedule, int workers) {
  require(!epsilon_schedule.empty() && !R_schedule.empty(), "scaling_study: empty schedule");
  for (std::size_t i = 1; i < R_schedule.size(); ++i) {
    require(R_schedule[i] > R_schedule[i - 1], "scaling_study: R schedule must increase");
  }
  ScalingTable table;
  // distance[eps][bin] at the largest radius
  std::vector<std::vector<double>> outer_distance;
  std::vector<int> scored_bins;
  for (double eps : epsilon_schedule) {
    ExperimentConfig cfg = base;
    cfg.packet.epsilon = eps;
    cfg.detector.radii = R_schedule;
    cfg.detector.score_radius = R_schedule.back();
    const ExperimentReport rep = run_experiment(cfg, workers);
    std::vector<double> prev_minus;
    for (std::size_t r = 0; r < R_schedule.size(); ++r) {
      double n_minus = std::nan("");
      if (rep.y0) {
        const CrossingTally& t = rep.y0->radii[r].tally;
        n_minus = t.count ? t.full_nminus_sum / static_cast<double>(t.count) : 0.0;
        if (!prev_minus.empty() && n_minus > prev_minus.back()) table.gap_decreasing = false;
        prev_minus.push_back(n_minus);
      }
      for (const BinRow& row : rep.rows[r]) {
        if (!row.geometry.scored) continue;
        ScalingRow s;
        s.epsilon = eps;
        s.radius = R_schedule[r];
        s.bin = row.bin;
        s.sigma_emp = row.sigma_emp;
        s.sigma_emp_se = row.sigma_emp_se;
        s.sigma_pw = row.sigma_pw;
        s.distance = row.sigma_pw > 0.0 ? std::abs(row.sigma_emp - row.sigma_pw) / row.sigma_pw : std::nan("");
        s.n_minus = n_minus;
        table.rows.push_back(s);
      }
    }
    std::vector<double> dist;
    scored_bins.clear();
    for (const BinRow& row : rep.rows.back()) {
      if (!row.geometry.scored || !(row.sigma_pw > 0.0)) continue;
      scored_bins.push_back(row.bin);
      dist.push_back(std::abs(row.sigma_emp - row.sigma_pw) / row.sigma_pw);
    }
    outer_distance.push_back(std::move(dist));
  }
  const std::size_t nb = outer_distance.front().size();
  if (nb > 0) {
    int monotone = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      bool ok = true;
      for (std::size_t e = 1; e < outer_distance.size(); ++e) {
        if (outer_distance[e][b] > outer_distance[e - 1][b]) ok = false;
      }
      monotone += ok;
    }
    table.monotone_fraction = static_cast<double>(monotone) / nb;
  }
  return table;
}

DetectionProfile detection_profile(const ExperimentReport& rep) {
  const std::size_t s = rep.score_index();
  std::vector<double> r, p;
  for (const NodeResult& node : rep.nodes) {
    const CrossingTally& t = node.radii[s].tally;
    const DetectorSpec det = rep.config.detector_at(rep.config.detector.score_radius);
    double sum = 0.0;
    for (std::size_t b = 0; b < det.size(); ++b) {
      if (det.bins[b].scored) sum += t.ndet_sum[b];
    }
    r.push_back(node.job.r);
    p.push_back(t.count ? sum / static_cast<double>(t.count) : 0.0);
  }
  return DetectionProfile(std::move(r), std::move(p), rep.config.d_cut());
}

}  // namespace bohmscat
