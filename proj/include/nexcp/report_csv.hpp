#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include "nexcp/experiments.hpp"

namespace nexcp {

/// 17 significant digits (round-trips exactly); infinities print as inf/-inf.
std::string format_real(double v);

/// trial,time,method,covered,width
void write_results_csv(std::ostream& out, const ExperimentReport& report);
/// method,mean_coverage,mean_width
void write_summary_csv(std::ostream& out, const ExperimentReport& report);
/// time,method,rolling_coverage,rolling_width
void write_rolling_csv(std::ostream& out, const ExperimentReport& report);

/// results.csv, summary.csv and rolling.csv under `dir` (created if needed).
void write_report(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace nexcp
