#include "nexcp/report_csv.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace nexcp {

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

void write_results_csv(std::ostream& out, const ExperimentReport& report) {
  out << "trial,time,method,covered,width\n";
  for (const auto& r : report.records) {
    fmt::print(out, "{},{},{},{},{}\n", r.trial, r.time, report.methods.at(r.method), r.covered ? 1 : 0,
               format_real(r.width));
  }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
  out << "method,mean_coverage,mean_width\n";
  for (const auto& s : report.summary) {
    fmt::print(out, "{},{},{}\n", s.method, format_real(s.mean_coverage), format_real(s.mean_width));
  }
}

void write_rolling_csv(std::ostream& out, const ExperimentReport& report) {
  out << "time,method,rolling_coverage,rolling_width\n";
  for (const auto& r : report.rolling) {
    fmt::print(out, "{},{},{},{}\n", r.time, report.methods.at(r.method), format_real(r.coverage),
               format_real(r.width));
  }
}

void write_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  auto emit = [&](const char* name, void (*writer)(std::ostream&, const ExperimentReport&)) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
    writer(out, report);
    if (!out) throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
  };
  emit("results.csv", write_results_csv);
  emit("summary.csv", write_summary_csv);
  emit("rolling.csv", write_rolling_csv);
}

}  // namespace nexcp
