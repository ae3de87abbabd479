#pragma once

#include <string>
#include <vector>

#include "bohmscat/experiment.hpp"

namespace bohmscat {

// %.17g, with "nan" / "inf" spelled out.
std::string format_double(double x);

// First line of every CSV: "# bohmscat config_hash=<hex> seed=<u64>".
std::string provenance_line(const ExperimentConfig& cfg);

std::string sigma_csv(const ExperimentReport& report);
// FAST table of the y = 0 node at detector.radii[radius_index].
std::string flux_csv(const ExperimentConfig& cfg, const NodeResult& y0, std::size_t radius_index);
std::vector<FastBinReport> fast_report(const ExperimentConfig& cfg, const NodeResult& y0,
                                       std::size_t radius_index);
std::string report_json(const ExperimentReport& report);
// Partial-wave amplitude on a 1 degree grid, no propagation.
std::string oracle_csv(const ExperimentConfig& cfg);
std::string scaling_csv(const ExperimentConfig& base, const ScalingTable& table);
std::string lln_csv(const ExperimentConfig& cfg, const LlnTable& table);
std::string paths_csv(const ExperimentConfig& cfg, const std::vector<NodeResult>& nodes);

// Detection profile rebuilt from a report.json written by write_report.
DetectionProfile profile_from_report(const std::string& report_json_text);

void write_text(const std::string& dir, const std::string& name, const std::string& text);
// report.json, sigma.csv, flux.csv (when the y = 0 node ran) and paths.csv
// (when path rows were recorded).
void write_report(const ExperimentReport& report, const std::string& dir);
void write_failed_marker(const std::string& dir, const std::string& message);

}  // namespace bohmscat
