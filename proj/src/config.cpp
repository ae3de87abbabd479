#include "bohmscat/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bohmscat/error.hpp"

namespace bohmscat {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::config_invalid, "config: " + what); }

// Reads known keys from one JSON object and rejects everything else.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad(path_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      bad(path_ + "." + key + " has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <class F>
  void sub(const char* key, F&& read) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    Section s(j_.at(key), path_.empty() ? key : path_ + "." + key);
    read(s);
    s.finish();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) bad("unknown key " + (path_.empty() ? "" : path_ + ".") + it.key());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    bad(std::string("not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section root(doc, "");
  root.sub("grid", [&](Section& s) {
    s.get("n", c.grid.n);
    s.get("extent", c.grid.extent);
  });
  root.sub("potential", [&](Section& s) {
    s.get("kind", c.potential.kind);
    s.get("v0", c.potential.v0);
    s.get("a", c.potential.a);
  });
  root.sub("packet", [&](Section& s) {
    s.get("sigma", c.packet.sigma);
    s.get("k0", c.packet.k0);
    s.get("epsilon", c.packet.epsilon);
  });
  root.sub("beam", [&](Section& s) {
    s.get("L_source", c.beam.L_source);
    s.get("tau", c.beam.tau);
    if (s.has("D_cut")) {
      const json& d = s.raw("D_cut");
      if (d.is_string() && d.get<std::string>() == "auto") {
        c.beam.D_cut = 0.0;
      } else if (d.is_number()) {
        c.beam.D_cut = d.get<double>();
        if (!(c.beam.D_cut > 0.0)) bad("beam.D_cut must be positive or \"auto\"");
      } else {
        bad("beam.D_cut must be a number or \"auto\"");
      }
    }
  });
  root.sub("detector", [&](Section& s) {
    s.get("radii", c.detector.radii);
    s.get("score_radius", c.detector.score_radius);
    s.get("theta_lo_deg", c.detector.bins.theta_lo_deg);
    s.get("theta_hi_deg", c.detector.bins.theta_hi_deg);
    s.get("theta_step_deg", c.detector.bins.theta_step_deg);
    s.get("n_phi", c.detector.bins.n_phi);
    s.get("theta_min_deg", c.detector.bins.theta_min_deg);
    s.get("freeze_margin", c.detector.freeze_margin);
  });
  root.sub("sampling", [&](Section& s) {
    s.get("M", c.sampling.M);
    s.get("trajectories", c.sampling.trajectories);
    s.get("seed", c.sampling.seed);
  });
  root.sub("evolution", [&](Section& s) {
    s.get("dt", c.evolution.dt);
    s.get("t_max", c.evolution.t_max);
    s.get("store_stride", c.evolution.store_stride);
    s.get("check_times", c.evolution.check_times);
    s.get("inside_stop", c.evolution.inside_stop);
    s.get("leak_stop", c.evolution.leak_stop);
    s.get("interpolation", c.evolution.interpolation);
    s.get("c_step", c.evolution.c_step);
  });
  root.sub("diagnostics", [&](Section& s) {
    s.get("y0_node", c.diagnostics.y0_node);
    s.get("continuity_stride", c.diagnostics.continuity_stride);
    s.get("path_dump", c.diagnostics.path_dump);
  });
  root.sub("outputs", [&](Section& s) { s.get("directory", c.outputs.directory); });
  root.sub("gates", [&](Section& s) {
    s.get("ratio_tol", c.gates.ratio_tol);
    s.get("se_multiple", c.gates.se_multiple);
    s.get("min_fraction", c.gates.min_fraction);
  });
  root.sub("scaling", [&](Section& s) {
    s.get("epsilon", c.scaling.epsilon);
    s.get("radii", c.scaling.radii);
  });
  root.sub("lln", [&](Section& s) {
    s.get("tau", c.lln.tau);
    s.get("repeats", c.lln.repeats);
  });
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config_invalid, "config: cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

GridSpec ExperimentConfig::grid_spec() const { return build_grid(grid.n, grid.extent); }

PotentialModel ExperimentConfig::potential_model() const {
  if (potential.kind == "zero") return PotentialModel::zero();
  if (potential.kind == "gaussian_well") return PotentialModel::gaussian_well(potential.v0, potential.a);
  bad("potential.kind must be \"zero\" or \"gaussian_well\"");
}

double ExperimentConfig::d_cut() const {
  if (beam.D_cut > 0.0) return beam.D_cut;
  return minimum_d_cut(packet.sigma, packet.epsilon, potential.a);
}

BeamConfig ExperimentConfig::beam_config() const {
  BeamConfig b;
  b.k0 = {0.0, 0.0, packet.k0};
  b.sigma = packet.sigma;
  b.epsilon = packet.epsilon;
  b.L_source = beam.L_source;
  b.D_cut = d_cut();
  b.tau = beam.tau;
  b.rng_seed = sampling.seed;
  return b;
}

DetectorSpec ExperimentConfig::detector_at(double radius) const { return make_detector(radius, detector.bins); }

Interpolation ExperimentConfig::interpolation() const {
  if (evolution.interpolation == "trilinear") return Interpolation::trilinear;
  if (evolution.interpolation == "phase_trilinear") return Interpolation::phase_trilinear;
  if (evolution.interpolation == "spectral") return Interpolation::spectral;
  bad("evolution.interpolation must be trilinear, phase_trilinear or spectral");
}

int ExperimentConfig::shell_width() const { return default_shell_width(grid_spec()); }

namespace {

template <class F>
void check(const std::string& field, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::config_invalid) throw;
    bad(field + ": " + e.what());
  }
}

void ensure(bool ok, const std::string& what) {
  if (!ok) bad(what);
}

}  // namespace

void validate_config(const ExperimentConfig& c) {
  GridSpec g;
  check("grid", [&] { g = c.grid_spec(); });
  PotentialModel V;
  check("potential", [&] { V = c.potential_model(); });
  if (V.kind != PotentialModel::Kind::zero) ensure(c.potential.a > 0.0, "potential.a must be positive");
  PacketSpec p;
  p.sigma = c.packet.sigma;
  p.k0 = {0.0, 0.0, c.packet.k0};
  p.epsilon = c.packet.epsilon;
  check("packet", [&] { validate_packet_on_grid(p, g); });
  const BeamConfig b = c.beam_config();
  check("beam", [&] { validate_beam(b, c.potential.a); });
  const double shell = c.shell_width() * g.dx;
  const double safe = g.half_extent() - shell;
  ensure(c.beam.L_source + 5.0 * p.position_std() < safe,
         "beam.L_source: source packet does not fit inside the grid interior");
  ensure(b.D_cut + 5.0 * p.position_std() < safe, "beam.D_cut: outer packets do not fit inside the grid interior");

  ensure(!c.detector.radii.empty(), "detector.radii must not be empty");
  bool score_found = false;
  double r_max = 0.0;
  for (double R : c.detector.radii) {
    ensure(R > 0.0, "detector.radii must be positive");
    if (R == c.detector.score_radius) score_found = true;
    r_max = std::max(r_max, R);
  }
  ensure(score_found, "detector.score_radius must be one of detector.radii");
  ensure(c.detector.freeze_margin > 0.0, "detector.freeze_margin must be positive");
  ensure(r_max + c.detector.freeze_margin < safe,
         "detector.radii: largest sphere plus freeze margin must lie inside the grid interior");
  check("detector", [&] { c.detector_at(r_max); });

  ensure(c.sampling.M >= 4, "sampling.M must be >= 4");
  ensure(c.sampling.trajectories >= 1, "sampling.trajectories must be >= 1");

  EvolutionPlan plan{c.evolution.dt, c.evolution.t_max, c.evolution.store_stride};
  check("evolution", [&] { validate_plan(plan, g, V); });
  ensure(c.evolution.t_max > 0.0, "evolution.t_max must be positive");
  for (double t : c.evolution.check_times) {
    ensure(t > 0.0 && t <= c.evolution.t_max, "evolution.check_times must lie in (0, t_max]");
  }
  ensure(c.evolution.inside_stop >= 0.0, "evolution.inside_stop must be >= 0");
  ensure(c.evolution.leak_stop > 0.0, "evolution.leak_stop must be positive");
  ensure(c.evolution.c_step > 0.0, "evolution.c_step must be positive");
  check("evolution.interpolation", [&] { c.interpolation(); });

  ensure(c.diagnostics.continuity_stride >= 1, "diagnostics.continuity_stride must be >= 1");
  ensure(c.diagnostics.path_dump >= 0, "diagnostics.path_dump must be >= 0");
  ensure(!c.outputs.directory.empty(), "outputs.directory must not be empty");
  ensure(c.gates.ratio_tol > 0.0 && c.gates.se_multiple > 0.0 && c.gates.min_fraction >= 0.0,
         "gates: tolerances must be positive");
  for (double e : c.scaling.epsilon) ensure(e > 0.0 && e <= 1.0, "scaling.epsilon entries must lie in (0, 1]");
  for (double R : c.scaling.radii) ensure(R > 0.0, "scaling.radii entries must be positive");
  for (double t : c.lln.tau) ensure(t > 0.0, "lln.tau entries must be positive");
  ensure(c.lln.repeats >= 2, "lln.repeats must be >= 2");
}

std::string canonical_json(const ExperimentConfig& c) {
  json j;
  j["grid"] = {{"n", c.grid.n}, {"extent", c.grid.extent}};
  j["potential"] = {{"kind", c.potential.kind}, {"v0", c.potential.v0}, {"a", c.potential.a}};
  j["packet"] = {{"sigma", c.packet.sigma}, {"k0", c.packet.k0}, {"epsilon", c.packet.epsilon}};
  j["beam"] = {{"L_source", c.beam.L_source}, {"D_cut", c.d_cut()}, {"tau", c.beam.tau}};
  j["detector"] = {{"radii", c.detector.radii},
                   {"score_radius", c.detector.score_radius},
                   {"theta_lo_deg", c.detector.bins.theta_lo_deg},
                   {"theta_hi_deg", c.detector.bins.theta_hi_deg},
                   {"theta_step_deg", c.detector.bins.theta_step_deg},
                   {"n_phi", c.detector.bins.n_phi},
                   {"theta_min_deg", c.detector.bins.theta_min_deg},
                   {"freeze_margin", c.detector.freeze_margin}};
  j["sampling"] = {{"M", c.sampling.M}, {"trajectories", c.sampling.trajectories}, {"seed", c.sampling.seed}};
  j["evolution"] = {{"dt", c.evolution.dt},
                    {"t_max", c.evolution.t_max},
                    {"store_stride", c.evolution.store_stride},
                    {"check_times", c.evolution.check_times},
                    {"inside_stop", c.evolution.inside_stop},
                    {"leak_stop", c.evolution.leak_stop},
                    {"interpolation", c.evolution.interpolation},
                    {"c_step", c.evolution.c_step}};
  j["diagnostics"] = {{"y0_node", c.diagnostics.y0_node},
                      {"continuity_stride", c.diagnostics.continuity_stride},
                      {"path_dump", c.diagnostics.path_dump}};
  j["gates"] = {{"ratio_tol", c.gates.ratio_tol},
                {"se_multiple", c.gates.se_multiple},
                {"min_fraction", c.gates.min_fraction}};
  j["scaling"] = {{"epsilon", c.scaling.epsilon}, {"radii", c.scaling.radii}};
  j["lln"] = {{"tau", c.lln.tau}, {"repeats", c.lln.repeats}};
  // outputs.directory is deliberately left out: moving a run does not change it.
  return j.dump();
}

std::uint64_t config_hash(const ExperimentConfig& c) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_json(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace bohmscat
