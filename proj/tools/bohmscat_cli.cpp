#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include "bohmscat/error.hpp"
#include "bohmscat/experiment.hpp"
#include "bohmscat/report.hpp"

namespace {

using namespace bohmscat;

enum Exit { kOk = 0, kFailure = 1, kConfigInvalid = 2, kPhysics = 3, kGate = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
  bool gates = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "override sampling.seed");
  app->add_option("--out", c.out, "output directory (default: outputs.directory)");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--gates", c.gates, "exit 4 when an acceptance gate fails");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.sampling.seed = *c.seed;
  validate_config(cfg);
  return cfg;
}

std::string out_dir(const Common& c, const ExperimentConfig& cfg) {
  return c.out.empty() ? cfg.outputs.directory : c.out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::invalid_argument, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cmd_run(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const std::string dir = out_dir(c, cfg);
  const ExperimentReport rep = run_experiment(cfg, c.workers);
  write_report(rep, dir);
  std::cout << "wrote " << dir << "/report.json (config " << rep.config_hash << ")\n";
  for (const std::string& f : rep.gates.failures) std::cout << "gate: " << f << '\n';
  return c.gates && !rep.gates.passed ? kGate : kOk;
}

int cmd_scaling(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const std::string dir = out_dir(c, cfg);
  std::vector<double> eps = cfg.scaling.epsilon;
  std::vector<double> radii = cfg.scaling.radii;
  if (eps.empty()) eps = {cfg.packet.epsilon};
  if (radii.empty()) {
    radii = cfg.detector.radii;
    std::sort(radii.begin(), radii.end());
  }
  const ScalingTable t = scaling_study(cfg, eps, radii, c.workers);
  write_text(dir, "scaling.csv", scaling_csv(cfg, t));
  std::cout << "monotone fraction " << t.monotone_fraction << ", n_minus gap decreasing in R: "
            << (t.gap_decreasing ? "yes" : "no") << '\n';
  const bool pass = t.monotone_fraction >= 0.8 && t.gap_decreasing;
  return c.gates && !pass ? kGate : kOk;
}

int cmd_oracle(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const std::string dir = out_dir(c, cfg);
  write_text(dir, "oracle.csv", oracle_csv(cfg));
  std::cout << "wrote " << dir << "/oracle.csv\n";
  return kOk;
}

int cmd_fast(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const std::string dir = out_dir(c, cfg);
  NodeJob job;
  job.index = cfg.sampling.M;
  job.with_cone = true;
  const NodeResult y0 = run_node(cfg, job);
  ExperimentReport rep;
  rep.config = cfg;
  const std::size_t s = rep.score_index();
  write_text(dir, "flux.csv", flux_csv(cfg, y0, s));
  bool pass = true;
  for (const FastBinReport& r : fast_report(cfg, y0, s)) {
    if (r.scored && !(r.rel_diff < 0.05)) pass = false;
  }
  std::cout << "wrote " << dir << "/flux.csv\n";
  return c.gates && !pass ? kGate : kOk;
}

int cmd_lln(const Common& c, const std::string& report_path) {
  const ExperimentConfig cfg = load(c);
  const std::string dir = out_dir(c, cfg);
  const DetectionProfile profile = profile_from_report(read_file(report_path));
  const LlnTable t = lln_run(cfg.beam_config(), profile, cfg.lln.tau, cfg.lln.repeats);
  write_text(dir, "lln.csv", lln_csv(cfg, t));
  std::cout << "gamma_hat " << t.gamma_hat << ", fitted exponent " << t.fitted_exponent << '\n';
  const bool pass = t.fitted_exponent >= -0.6 && t.fitted_exponent <= -0.4;
  return c.gates && !pass ? kGate : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian scattering experiment driver"};
  app.require_subcommand(1);
  Common c;
  std::string report_path;
  CLI::App* run = app.add_subcommand("run", "full experiment: sigma.csv, flux.csv, report.json");
  CLI::App* scaling = app.add_subcommand("scaling", "epsilon (outer) by R (inner) sweep");
  CLI::App* oracle = app.add_subcommand("oracle", "partial-wave amplitude table only");
  CLI::App* fast = app.add_subcommand("fast-check", "flux-across-surfaces check on the y = 0 field");
  CLI::App* lln = app.add_subcommand("lln", "counting-process resampling from a detection profile");
  for (CLI::App* sub : {run, scaling, oracle, fast, lln}) add_common(sub, c);
  lln->add_option("--report", report_path, "report.json of a previous run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  std::string dir = c.out;
  try {
    if (dir.empty()) dir = load_config(c.config).outputs.directory;
  } catch (const Error&) {
    dir = "out";
  }
  try {
    if (*run) return cmd_run(c);
    if (*scaling) return cmd_scaling(c);
    if (*oracle) return cmd_oracle(c);
    if (*fast) return cmd_fast(c);
    return cmd_lln(c, report_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    try {
      write_failed_marker(dir, e.what());
    } catch (...) {
    }
    switch (e.kind()) {
      case ErrorKind::physics_precondition: return kPhysics;
      case ErrorKind::config_invalid:
      case ErrorKind::invalid_argument: return kConfigInvalid;
    }
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    try {
      write_failed_marker(dir, e.what());
    } catch (...) {
    }
    return kFailure;
  }
}
