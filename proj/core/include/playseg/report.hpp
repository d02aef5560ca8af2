#pragma once

// Report bundle of a run directory: report/summary.json plus one CSV per
// plotted series under report/series/. Sections whose artifacts are missing are
// listed under "missing" and omitted; regenerating from the same artifacts is
// byte-identical.

#include <filesystem>
#include <string>
#include <vector>

namespace playseg {

struct ReportBundle {
  std::string summary;  // JSON text
  std::vector<std::pair<std::string, std::string>> series;  // file name, CSV text
  std::vector<std::string> missing;
};

ReportBundle build_report(const std::filesystem::path& run_dir);
void write_report(const ReportBundle& bundle, const std::filesystem::path& out_dir);
/// build_report + write_report into run_dir/report.
ReportBundle emit_report(const std::filesystem::path& run_dir);

}  // namespace playseg
